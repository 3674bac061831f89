"""Sampler backends that execute anneal schedules on a QUBO.

The spin-vector Monte Carlo (SVMC) backend is a classical stand-in for the
annealing hardware: every variable is a planar rotor with angle ``theta``
that feels a transverse term ``-(A/2) sin(theta)`` and a problem term
``(B/2)(h cos(theta) + J cos cos)``, with ``A`` and ``B`` following the
schedule.  As ``B/A`` grows the rotors lock onto ``cos(theta) = +-1``.

All randomness comes from a counter-based hash keyed by
``(seed, read, sweep, variable)``, so a read's outcome does not depend on
which other reads are run, in what order, or on how many threads.
"""
from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import SamplerError
from .qubo import IsingModel, Qubo, bits_to_str, exact_minimum, qubo_energy, to_ising
from .schedule import (
    DEFAULT_ENERGY_SCALES,
    DEFAULT_SLOPE_MAX,
    AnnealSchedule,
    EnergyScaleTable,
    check,
    fmt17,
    interpolate_energy_scales,
)

_MASK64 = (1 << 64) - 1
_TIE_EPS = 1e-12


@dataclass(frozen=True)
class SamplerConfig:
    num_reads: int = 1000
    seed: int = 0
    sweeps_per_microsecond: int = 1
    inverse_temperature: float = 10.0
    proposal_width: float = 0.3
    energy_scales: EnergyScaleTable = field(default=DEFAULT_ENERGY_SCALES, repr=False)
    slope_max: float = DEFAULT_SLOPE_MAX

    def __post_init__(self):
        if self.num_reads < 1:
            raise ValueError("num_reads must be >= 1")
        if self.sweeps_per_microsecond < 1:
            raise ValueError("sweeps_per_microsecond must be >= 1")
        if not self.inverse_temperature > 0:
            raise ValueError("inverse_temperature must be positive")
        if not self.proposal_width > 0:
            raise ValueError("proposal_width must be positive")

    def with_seed(self, seed: int) -> "SamplerConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """One sampler invocation: ``bits[r]`` and ``energies[r]`` for read ``r``."""

    bits: np.ndarray
    energies: np.ndarray
    schedule_used: AnnealSchedule
    qubo_ref: str

    def __len__(self):
        return len(self.energies)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("read,energy,bits\n")
        for r, (b, e) in enumerate(zip(self.bits, self.energies)):
            buf.write(f"{r},{fmt17(e)},{bits_to_str(b)}\n")
        return buf.getvalue()


def qubo_ref(q: Qubo) -> str:
    h = hashlib.sha1()
    h.update(q.topology.edges.tobytes())
    h.update(q.linear.tobytes())
    h.update(q.quadratic.tobytes())
    return h.hexdigest()[:12]


def min_energy(ss: SampleSet) -> tuple[np.ndarray, float]:
    """Lowest-energy sample; the earliest read wins ties."""
    if len(ss) == 0:
        raise ValueError("empty sample set")
    k = int(np.argmin(ss.energies))
    return ss.bits[k], float(ss.energies[k])


def svmc_energy(theta, ising: IsingModel, A: float, B: float) -> float:
    """Classical rotor energy ``-(A/2) sum sin + (B/2)(sum h cos + sum J cos cos)``."""
    c = np.cos(np.asarray(theta, dtype=float))
    i, j = ising.topology.edges[:, 0], ising.topology.edges[:, 1]
    problem = c @ ising.h + (c[i] * c[j]) @ ising.J
    return float(-(A / 2) * np.sin(theta).sum() + (B / 2) * problem)


# --- counter-based randomness ------------------------------------------------


@njit(cache=True, inline="always")
def _mix(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _uniform(key, var, stream):
    z = _mix(key ^ np.uint64(var * 4 + stream))
    return np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _svmc_kernel(h, indptr, nbr, nbr_w, a_half, b_half, beta, width, seed_key, reads):
    n = h.shape[0]
    n_sweeps = a_half.shape[0]
    out = np.empty((reads.shape[0], n), dtype=np.uint8)
    theta = np.empty(n)
    cos_t = np.empty(n)
    sin_t = np.empty(n)
    for r in range(reads.shape[0]):
        read_key = _mix(seed_key ^ _mix(np.uint64(reads[r])))
        for i in range(n):
            theta[i] = 0.5 * np.pi
            cos_t[i] = np.cos(theta[i])
            sin_t[i] = 1.0
        for k in range(n_sweeps):
            key = _mix(read_key ^ np.uint64(k))
            a = a_half[k]
            b = b_half[k]
            for i in range(n):
                f = h[i]
                for p in range(indptr[i], indptr[i + 1]):
                    f += nbr_w[p] * cos_t[nbr[p]]
                proposal = theta[i] + width * (2.0 * _uniform(key, i, 0) - 1.0)
                if proposal < 0.0:
                    proposal = 0.0
                elif proposal > np.pi:
                    proposal = np.pi
                c_new = np.cos(proposal)
                s_new = np.sin(proposal)
                delta = -a * (s_new - sin_t[i]) + b * f * (c_new - cos_t[i])
                if delta <= 0.0 or _uniform(key, i, 1) < np.exp(-beta * delta):
                    theta[i] = proposal
                    cos_t[i] = c_new
                    sin_t[i] = s_new
        tie_key = _mix(read_key ^ np.uint64(n_sweeps))
        for i in range(n):
            c = cos_t[i]
            if abs(c) < _TIE_EPS:
                out[r, i] = 1 if _uniform(tie_key, i, 2) < 0.5 else 0
            else:
                out[r, i] = 1 if c > 0.0 else 0
    return out


def sweep_energy_scales(sch: AnnealSchedule, cfg: SamplerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-sweep ``(A, B)``; sweep ``k`` sees the schedule at its start time.

    ``ceil(total_time * sweeps_per_microsecond)`` sweeps are spread uniformly
    over the schedule, so each segment gets sweeps in proportion to its length.
    """
    total = sch.total_time
    n_sweeps = max(1, math.ceil(total * cfg.sweeps_per_microsecond - 1e-9))
    times = np.arange(n_sweeps) * (total / n_sweeps)
    s = np.clip(sch.fraction_at(times), 0.0, 1.0)
    return interpolate_energy_scales(cfg.energy_scales, s)


class SvmcSampler:
    """Spin-vector Monte Carlo backend."""

    name = "svmc"

    def anneal(self, q: Qubo, sch: AnnealSchedule, cfg: SamplerConfig, reads) -> np.ndarray:
        ising = to_ising(q)
        indptr, nbr, eid = q.topology.neighbors_csr()
        A, B = sweep_energy_scales(sch, cfg)
        try:
            return _svmc_kernel(
                ising.h,
                indptr,
                nbr,
                np.ascontiguousarray(ising.J[eid]),
                np.ascontiguousarray(A / 2),
                np.ascontiguousarray(B / 2),
                float(cfg.inverse_temperature),
                float(cfg.proposal_width),
                np.uint64(cfg.seed & _MASK64),
                np.asarray(reads, dtype=np.int64),
            )
        except Exception as exc:  # pragma: no cover - numba runtime failures
            raise SamplerError(f"SVMC kernel failed: {exc}") from exc

    def sample(self, q: Qubo, sch: AnnealSchedule, cfg: SamplerConfig) -> SampleSet:
        bits = self.anneal(q, sch, cfg, np.arange(cfg.num_reads))
        return SampleSet(bits, qubo_energy(q, bits), sch, qubo_ref(q))


class ExactSampler:
    """Returns ``num_reads`` copies of the exhaustive minimum; ignores the schedule."""

    name = "exact"

    def sample(self, q: Qubo, sch: AnnealSchedule, cfg: SamplerConfig) -> SampleSet:
        bits, energy = exact_minimum(q)
        all_bits = np.tile(bits, (cfg.num_reads, 1))
        return SampleSet(all_bits, np.full(cfg.num_reads, energy), sch, qubo_ref(q))


BACKENDS = {"svmc": SvmcSampler, "exact": ExactSampler}


def get_backend(backend) -> SvmcSampler | ExactSampler:
    if isinstance(backend, str):
        try:
            return BACKENDS[backend]()
        except KeyError:
            raise ValueError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return backend


def sample(backend, q: Qubo, sch: AnnealSchedule, cfg: SamplerConfig) -> SampleSet:
    """Validate the schedule and run ``cfg.num_reads`` anneals on ``backend``."""
    check(sch, cfg.slope_max)
    return get_backend(backend).sample(q, sch, cfg)


def svmc_anneal(q: Qubo, sch: AnnealSchedule, cfg: SamplerConfig, read_index: int) -> np.ndarray:
    """Bit string produced by a single SVMC read."""
    check(sch, cfg.slope_max)
    return SvmcSampler().anneal(q, sch, cfg, [read_index])[0]


def exact_backend_sample(q: Qubo, sch: AnnealSchedule, cfg: SamplerConfig) -> SampleSet:
    return ExactSampler().sample(q, sch, cfg)
