"""Slice sweeps over an anneal and the statistics computed from them.

A sweep slices the anneal at ``K`` evenly spaced times (the last one being
the full anneal), samples each slice several times, and keeps per slice the
pooled top-k energy statistics, the mean of the lowest 1% energies and a
single representative solution: the lowest-energy sample over all repeats.
Cross-slice quantities (Hamming distances, flip rates, freeze-out points)
are derived from the representatives.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .annealer import SampleSet, SamplerConfig, get_backend, sample
from .errors import AnnealSliceError, NormalizationError, ParseError
from .qubo import Qubo, Topology, bits_to_str, hamming_distance
from .schedule import fmt17, sliced_schedule
from .seeding import derive_seed


@dataclass(frozen=True)
class SliceSweepConfig:
    total_time: float
    num_slices: int
    reads_per_slice: int = 1000
    repeats: int = 10
    top_k: int = 10
    seed: int = 0
    quench_duration: float = 1.0

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")
        if self.num_slices < 2:
            raise ValueError("num_slices must be >= 2")
        if self.repeats < 1 or self.reads_per_slice < 1 or self.top_k < 1:
            raise ValueError("repeats, reads_per_slice and top_k must be >= 1")
        if self.top_k > self.reads_per_slice:
            raise ValueError("top_k cannot exceed reads_per_slice")

    @classmethod
    def desk_scale(cls, total_time: float, **kw) -> "SliceSweepConfig":
        kw = {"num_slices": 100, "reads_per_slice": 200, "repeats": 5, **kw}
        return cls(total_time, **kw)

    @classmethod
    def full_scale(cls, total_time: float, **kw) -> "SliceSweepConfig":
        kw = {"num_slices": int(total_time), **kw}
        return cls(total_time, **kw)

    def slice_times(self) -> np.ndarray:
        k = np.arange(1, self.num_slices + 1)
        return self.total_time * k / self.num_slices


class SliceRecord(NamedTuple):
    slice_index: int
    slice_time: float
    s_at_slice: float
    energy_mean: float
    energy_std: float
    min1pct_mean: float
    representative: np.ndarray
    representative_energy: float


@dataclass
class SliceSweep:
    records: list[SliceRecord]
    adjacent_hamming: np.ndarray
    flip_rate: np.ndarray
    per_qubit_freezeout: np.ndarray
    config: SliceSweepConfig | None = field(default=None, repr=False)

    @property
    def representatives(self) -> np.ndarray:
        return np.array([r.representative for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def energy_stats(sets: Sequence[SampleSet], top_k: int) -> tuple[float, float]:
    """Mean and population std of the ``top_k`` lowest energies of every set, pooled."""
    pooled = []
    for ss in sets:
        if len(ss) < top_k:
            raise ValueError(f"sample set has {len(ss)} reads, fewer than top_k={top_k}")
        pooled.append(np.sort(ss.energies)[:top_k])
    values = np.concatenate(pooled)
    return float(values.mean()), float(values.std())


def min1pct_mean(ss: SampleSet) -> float:
    """Mean of the lowest ``ceil(1%)`` energies."""
    if len(ss) < 100:
        raise ValueError(f"need at least 100 reads for a 1% tail, got {len(ss)}")
    count = -(-len(ss) // 100)
    return float(np.sort(ss.energies)[:count].mean())


def normalize_by_min(series: Sequence[float]) -> list[float]:
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise NormalizationError("cannot normalize an empty series")
    m = values.min()
    if m == 0:
        raise NormalizationError("series minimum is zero")
    return list(values / m)


def default_epsilon(series: Sequence[float]) -> float:
    """Population std of the last 5% of the series (at least two points)."""
    values = np.asarray(series, dtype=float)
    tail = values[-max(2, math.ceil(0.05 * len(values))):]
    scale = max(1.0, abs(values[-1]))
    return max(float(tail.std()), np.finfo(float).eps * scale)


def detect_freezeout(
    series: Sequence[float], window: int = 3, epsilon: float | None = None
) -> int | None:
    """First index from which every value stays within ``epsilon`` of the last one.

    Returns ``None`` when that plateau is shorter than ``window`` points.
    """
    values = np.asarray(series, dtype=float)
    if window < 2:
        raise ValueError("window must be >= 2")
    if len(values) < window:
        raise ValueError("series shorter than window")
    if epsilon is None:
        epsilon = default_epsilon(values)
    elif not epsilon > 0:
        raise ValueError("epsilon must be positive")
    outside = np.flatnonzero(np.abs(values - values[-1]) > epsilon)
    k = int(outside[-1]) + 1 if len(outside) else 0
    return k if len(values) - k >= window else None


def moving_average(series: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean over up to ``window`` points (shorter at the start)."""
    values = np.asarray(series, dtype=float)
    # explicit windows: a running cumsum would turn flat stretches into rounding noise
    return np.array([values[max(0, i - window + 1): i + 1].mean() for i in range(len(values))])


def per_qubit_freezeout_from_bits(reps: np.ndarray) -> np.ndarray:
    """Per variable, the first slice after which its value never changes again."""
    reps = np.asarray(reps)
    changed = reps[1:] != reps[:-1]
    out = np.zeros(reps.shape[1], dtype=np.int64)
    for i in range(reps.shape[1]):
        flips = np.flatnonzero(changed[:, i])
        if len(flips):
            out[i] = flips[-1] + 1
    return out


def per_qubit_freezeout(sweep: SliceSweep) -> np.ndarray:
    return per_qubit_freezeout_from_bits(sweep.representatives)


def _cross_slice(reps: np.ndarray):
    reps = np.asarray(reps)
    adjacent = np.array(
        [hamming_distance(a, b) for a, b in zip(reps[:-1], reps[1:])], dtype=np.int64
    )
    flips = np.count_nonzero(reps[1:] != reps[:-1], axis=0)
    return adjacent, flips / (len(reps) - 1), per_qubit_freezeout_from_bits(reps)


def assemble_sweep(records: list[SliceRecord], config: SliceSweepConfig | None = None) -> SliceSweep:
    reps = np.array([r.representative for r in records])
    adjacent, rate, freeze = _cross_slice(reps)
    return SliceSweep(records, adjacent, rate, freeze, config)


def _run_slice(q, cfg, k, t, backend, sampler_cfg, slope_max):
    try:
        sch = sliced_schedule(cfg.total_time, float(t), cfg.quench_duration, slope_max)
        sets = [
            sample(
                backend,
                q,
                sch,
                replace(sampler_cfg, num_reads=cfg.reads_per_slice, seed=derive_seed(cfg.seed, k, r)),
            )
            for r in range(cfg.repeats)
        ]
    except (AnnealSliceError, ValueError) as exc:
        raise type(exc)(f"slice {k} (t={t}): {exc}") from exc
    mean, std = energy_stats(sets, cfg.top_k)
    m1 = float(np.mean([min1pct_mean(s) for s in sets])) if cfg.reads_per_slice >= 100 else math.nan
    energies = np.concatenate([s.energies for s in sets])
    bits = np.concatenate([s.bits for s in sets])
    best = int(np.argmin(energies))
    return SliceRecord(k, float(t), float(t / cfg.total_time), mean, std, m1,
                       bits[best].copy(), float(energies[best]))


def run_slice_sweep(
    q: Qubo,
    cfg: SliceSweepConfig,
    backend="svmc",
    sampler_cfg: SamplerConfig | None = None,
    workers: int = 1,
) -> SliceSweep:
    """Slice the anneal at ``total_time * k / K`` for ``k = 1..K`` and collect statistics.

    Repeat ``r`` of slice ``k`` samples with seed ``derive_seed(cfg.seed, k, r)``,
    so the sweep is identical however the slices are scheduled.
    """
    backend = get_backend(backend)
    sampler_cfg = sampler_cfg or SamplerConfig()
    slope_max = sampler_cfg.slope_max
    times = cfg.slice_times()

    def one(k):
        return _run_slice(q, cfg, k, times[k], backend, sampler_cfg, slope_max)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(one, range(cfg.num_slices)))
    else:
        records = [one(k) for k in range(cfg.num_slices)]
    return assemble_sweep(records, cfg)


# --- heatmap data --------------------------------------------------------------


class HeatmapCell(NamedTuple):
    var: int
    x: float
    y: float
    rate: float
    color: str


def rate_color(rate: float, max_rate: float) -> str:
    """Linear blend from pure blue (0) to pure red (``max_rate``)."""
    f = rate / max_rate if max_rate > 0 else 0.0
    red = int(round(255 * min(max(f, 0.0), 1.0)))
    return f"#{red:02x}00{255 - red:02x}"


def flip_rate_heatmap_data(flip_rate, topology: Topology) -> list[HeatmapCell]:
    """One colored cell per variable; accepts a sweep or a flip-rate vector."""
    rates = np.asarray(flip_rate.flip_rate if isinstance(flip_rate, SliceSweep) else flip_rate,
                       dtype=float)
    if rates.shape != (topology.num_vars,):
        raise ValueError(f"{len(rates)} flip rates for {topology.num_vars} variables")
    layout = topology.layout
    if layout is None:
        side = math.ceil(math.sqrt(topology.num_vars))
        layout = np.array([(i % side, i // side) for i in range(topology.num_vars)], dtype=float)
    top = float(rates.max()) if len(rates) else 0.0
    return [
        HeatmapCell(i, float(layout[i, 0]), float(layout[i, 1]), float(r), rate_color(r, top))
        for i, r in enumerate(rates)
    ]


# --- CSV formats --------------------------------------------------------------

SWEEP_HEADER = "slice_index,time_us,s,energy_mean,energy_std,min1pct_mean,adjacent_hamming"
FLIP_HEADER = "var,flip_rate,freezeout_slice"


def sweep_to_csv(sweep: SliceSweep) -> str:
    buf = io.StringIO()
    buf.write(SWEEP_HEADER + "\n")
    for r in sweep.records:
        k = r.slice_index
        ham = "" if k == 0 else str(int(sweep.adjacent_hamming[k - 1]))
        buf.write(
            f"{k},{fmt17(r.slice_time)},{fmt17(r.s_at_slice)},{fmt17(r.energy_mean)},"
            f"{fmt17(r.energy_std)},{fmt17(r.min1pct_mean)},{ham}\n"
        )
    return buf.getvalue()


def flip_rates_to_csv(sweep: SliceSweep) -> str:
    buf = io.StringIO()
    buf.write(FLIP_HEADER + "\n")
    for i, (rate, fz) in enumerate(zip(sweep.flip_rate, sweep.per_qubit_freezeout)):
        buf.write(f"{i},{fmt17(rate)},{int(fz)}\n")
    return buf.getvalue()


def representatives_to_csv(sweep: SliceSweep) -> str:
    buf = io.StringIO()
    buf.write("slice_index,energy,bits\n")
    for r in sweep.records:
        buf.write(f"{r.slice_index},{fmt17(r.representative_energy)},{bits_to_str(r.representative)}\n")
    return buf.getvalue()


def read_flip_rates(text: str, source: str = "<flip-rates>") -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or ",".join(c.strip() for c in rows[0]) != FLIP_HEADER:
        raise ParseError(f"{source}: expected header '{FLIP_HEADER}'")
    rates = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            rates[int(row[0])] = float(row[1])
        except (ValueError, IndexError):
            raise ParseError(f"{source}: line {lineno}: bad row {row!r}") from None
    if sorted(rates) != list(range(len(rates))):
        raise ParseError(f"{source}: variable indices must be 0..n-1")
    return np.array([rates[i] for i in range(len(rates))])


def read_sweep_csv(text: str) -> dict[str, np.ndarray]:
    """Columns of a slice-sweep CSV as float arrays (blank cells become NaN)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    cols = SWEEP_HEADER.split(",")
    return {c: np.array([float(r[c]) if r[c] != "" else math.nan for r in rows]) for c in cols}
