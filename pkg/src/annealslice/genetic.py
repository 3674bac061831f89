"""Genetic search for QUBOs whose best solution moves a lot during the anneal.

Fitness of an instance is the energy gained by a long anneal over a short one,
times the percentage of bits that differ between the long anneal's best
solution and the best solution read out from an early slice of it.  Each
generation keeps the fittest proportion, refills the population by uniform
crossover, and resamples coefficients at the mutation rate.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .annealer import SamplerConfig, get_backend, min_energy, sample
from .errors import ConfigurationError
from .qubo import LINEAR_RANGE, QUADRATIC_RANGE, Qubo, Topology, hamming_distance, random_qubo
from .schedule import fmt17, sliced_schedule, standard_schedule
from .seeding import derive_rng, derive_seed

# key namespaces for derived seeds
_INIT, _EVAL, _BREED = 1, 2, 3


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    crossover_proportion: float = 0.25
    mutation_rate: float = 0.01
    iterations: int = 50
    short_time: float = 1.0
    long_time: float = 1000.0
    reads_per_eval: int = 1000
    seed: int = 0
    backend: str = "svmc"
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    quench_duration: float = 1.0
    linear_range: tuple[float, float] = LINEAR_RANGE
    quad_range: tuple[float, float] = QUADRATIC_RANGE

    def __post_init__(self):
        if self.population_size < 1 or self.iterations < 1 or self.reads_per_eval < 1:
            raise ConfigurationError("population_size, iterations and reads_per_eval must be >= 1")
        if not 0 < self.crossover_proportion <= 1:
            raise ConfigurationError("crossover_proportion must lie in (0, 1]")
        if not 0 <= self.mutation_rate <= 1:
            raise ConfigurationError("mutation_rate must lie in [0, 1]")
        if not 0 < self.short_time < self.long_time:
            raise ConfigurationError("need 0 < short_time < long_time")

    @property
    def num_parents(self) -> int:
        return selection_count(self.population_size, self.crossover_proportion)

    def check_breedable(self) -> None:
        if self.num_parents > self.population_size:
            raise ConfigurationError(
                f"population of {self.population_size} cannot supply two distinct parents"
            )

    def sampler_config(self, seed: int) -> SamplerConfig:
        return replace(self.sampler, num_reads=self.reads_per_eval, seed=seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sampler"] = {k: v for k, v in d["sampler"].items() if k != "energy_scales"}
        return d


class FitnessRecord(NamedTuple):
    delta: float
    hamming: int
    fitness: float
    num_vars: int
    short_min: tuple[np.ndarray, float]
    long_min: tuple[np.ndarray, float]
    slice_min: tuple[np.ndarray, float]


class HistoryRow(NamedTuple):
    iteration: int
    best_fitness: float
    mean_fitness: float
    best_so_far: float


@dataclass
class GaResult:
    best: Qubo
    best_fitness: float
    history: list[HistoryRow]
    final_fitness: list[float]


def fitness_value(delta: float, hamming: int, num_vars: int) -> float:
    return delta * (hamming / num_vars * 100)


def selection_count(population_size: int, proportion: float) -> int:
    # round() guards against 0.15 * 20 = 3.0000000000000004
    return max(2, math.ceil(round(population_size * proportion, 9)))


def fitness(q: Qubo, cfg: GaConfig, seed: int | None = None, backend=None) -> FitnessRecord:
    """Short anneal, long anneal, and an early slice of the long anneal."""
    seed = cfg.seed if seed is None else seed
    backend = get_backend(backend or cfg.backend)
    runs = [
        standard_schedule(cfg.short_time),
        standard_schedule(cfg.long_time),
        sliced_schedule(cfg.long_time, cfg.short_time, cfg.quench_duration, cfg.sampler.slope_max),
    ]
    short, long_, slc = (
        min_energy(sample(backend, q, sch, cfg.sampler_config(derive_seed(seed, k))))
        for k, sch in enumerate(runs)
    )
    delta = short[1] - long_[1]
    d = hamming_distance(long_[0], slc[0])
    return FitnessRecord(delta, d, fitness_value(delta, d, q.num_vars), q.num_vars, short, long_, slc)


def init_population(cfg: GaConfig, topology: Topology) -> list[Qubo]:
    return [
        random_qubo(topology, derive_seed(cfg.seed, _INIT, i), cfg.linear_range, cfg.quad_range)
        for i in range(cfg.population_size)
    ]


def select(population: Sequence[Qubo], fitnesses: Sequence[float], p_cross: float) -> list[Qubo]:
    """The fittest ``max(2, ceil(N * p_cross))`` members; lower index wins ties."""
    count = selection_count(len(population), p_cross)
    if count > len(population):
        raise ConfigurationError(f"need at least 2 parents, population has {len(population)}")
    order = sorted(range(len(population)), key=lambda i: (-fitnesses[i], i))
    return [population[i] for i in order[:count]]


def crossover(parents: Sequence[Qubo], n: int, rng: np.random.Generator) -> list[Qubo]:
    """``n`` children, each coefficient taken from one of two distinct parents."""
    if len(parents) < 2:
        raise ConfigurationError("crossover needs at least two parents")
    coeffs = [p.coefficients() for p in parents]
    children = []
    for _ in range(n):
        a, b = rng.choice(len(parents), size=2, replace=False)
        take_a = rng.random(len(coeffs[a])) < 0.5
        children.append(parents[a].with_coefficients(np.where(take_a, coeffs[a], coeffs[b])))
    return children


def mutate(
    population: Sequence[Qubo],
    p_mut: float,
    rng: np.random.Generator,
    linear_range: tuple[float, float] = LINEAR_RANGE,
    quad_range: tuple[float, float] = QUADRATIC_RANGE,
) -> list[Qubo]:
    """Resample each coefficient from its range with probability ``p_mut``."""
    out = []
    for q in population:
        n, m = q.num_vars, q.topology.num_edges
        hit = rng.random(n + m) < p_mut
        fresh = np.concatenate([rng.uniform(*linear_range, n), rng.uniform(*quad_range, m)])
        out.append(q.with_coefficients(np.where(hit, fresh, q.coefficients())) if hit.any() else q)
    return out


def evaluate_population(
    population: Sequence[Qubo],
    cfg: GaConfig,
    generation: int,
    fitness_fn: Callable[[Qubo], float] | None = None,
    workers: int = 1,
) -> list[float]:
    """Fitness of every member, seeded by ``(cfg.seed, generation, index)``."""
    if fitness_fn is not None:
        return [float(fitness_fn(q)) for q in population]

    def one(i):
        return fitness(population[i], cfg, derive_seed(cfg.seed, _EVAL, generation, i)).fitness

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, range(len(population))))
    return [one(i) for i in range(len(population))]


def run_ga(
    cfg: GaConfig,
    topology: Topology,
    fitness_fn: Callable[[Qubo], float] | None = None,
    workers: int = 1,
    progress: Callable[[HistoryRow], None] | None = None,
) -> GaResult:
    """Evolve ``cfg.iterations`` generations and return the fittest final member.

    ``fitness_fn`` replaces the sampler-based fitness (useful as a cheap,
    deterministic test hook).
    """
    cfg.check_breedable()
    population = init_population(cfg, topology)
    history: list[HistoryRow] = []
    best_so_far = -math.inf
    for g in range(cfg.iterations):
        fit = evaluate_population(population, cfg, g, fitness_fn, workers)
        best_so_far = max(best_so_far, max(fit))
        row = HistoryRow(g, max(fit), float(np.mean(fit)), best_so_far)
        history.append(row)
        if progress:
            progress(row)
        rng = derive_rng(cfg.seed, _BREED, g)
        parents = select(population, fit, cfg.crossover_proportion)
        children = crossover(parents, cfg.population_size, rng)
        population = mutate(children, cfg.mutation_rate, rng, cfg.linear_range, cfg.quad_range)
    final = evaluate_population(population, cfg, cfg.iterations, fitness_fn, workers)
    k = int(np.argmax(final))
    return GaResult(population[k], final[k], history, final)


def history_to_csv(history: Sequence[HistoryRow]) -> str:
    buf = io.StringIO()
    buf.write("iteration,best_fitness,mean_fitness,best_so_far\n")
    for r in history:
        buf.write(f"{r.iteration},{fmt17(r.best_fitness)},{fmt17(r.mean_fitness)},{fmt17(r.best_so_far)}\n")
    return buf.getvalue()
