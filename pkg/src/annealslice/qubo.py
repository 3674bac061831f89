"""QUBO and Ising problem instances on sparse hardware-style topologies.

A :class:`Qubo` stores one linear weight per variable and one quadratic
weight per topology edge, both as dense numpy arrays aligned with
``topology.edges``.  Bit strings are ``uint8`` arrays of zeros and ones.

Chimera indexing convention used by :func:`chimera_topology`::

    index = ((row * cols + col) * 2 + shore_side) * shore + k

``shore_side`` 0 is the left shore, 1 the right shore.  Horizontal couplers
join left-shore qubit ``k`` of cell ``(r, c)`` to left-shore qubit ``k`` of
``(r, c + 1)``; vertical couplers join right-shore qubit ``k`` of ``(r, c)``
to right-shore qubit ``k`` of ``(r + 1, c)``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, ParseError, SizeError

LINEAR_RANGE = (-2.0, 2.0)
QUADRATIC_RANGE = (-1.0, 1.0)
EXACT_MAX_VARS = 24

_CHIMERA_RE = re.compile(r"^chimera-(\d+)-(\d+)-(\d+)$")


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected simple graph over variables ``0 .. num_vars - 1``.

    Edges are stored canonically as ``(i, j)`` with ``i < j``, sorted
    lexicographically.  ``layout`` holds optional 2D drawing coordinates.
    """

    num_vars: int
    edges: np.ndarray
    layout: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("num_vars must be positive")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            if edges.min() < 0 or edges.max() >= self.num_vars:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
        edges = np.sort(edges, axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        if len(edges) > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            raise ValueError("duplicate edge")
        edges.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        if self.layout is not None:
            layout = np.asarray(self.layout, dtype=float)
            if layout.shape != (self.num_vars, 2):
                raise ValueError("layout must have one (x, y) entry per variable")
            layout.flags.writeable = False
            object.__setattr__(self, "layout", layout)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(i), int(j)): k for k, (i, j) in enumerate(self.edges)}

    def neighbors_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(indptr, indices, edge_ids)`` adjacency in CSR form."""
        n, m = self.num_vars, self.num_edges
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return np.cumsum(indptr), dst[order].astype(np.int64), eid[order].astype(np.int64)

    def same_graph(self, other: "Topology") -> bool:
        return self.num_vars == other.num_vars and np.array_equal(self.edges, other.edges)


def chimera_topology(rows: int, cols: int, shore: int) -> Topology:
    """Chimera graph of ``rows x cols`` complete-bipartite ``K_{shore,shore}`` cells."""
    if rows < 1 or cols < 1 or shore < 1:
        raise ValueError("rows, cols and shore must all be >= 1")

    def index(r, c, side, k):
        return ((r * cols + c) * 2 + side) * shore + k

    edges = []
    layout = np.zeros((rows * cols * 2 * shore, 2))
    for r in range(rows):
        for c in range(cols):
            for k in range(shore):
                for side in (0, 1):
                    layout[index(r, c, side, k)] = (c * 3 + side, r * (shore + 1) + k)
                for k2 in range(shore):
                    edges.append((index(r, c, 0, k), index(r, c, 1, k2)))
                if c + 1 < cols:
                    edges.append((index(r, c, 0, k), index(r, c + 1, 0, k)))
                if r + 1 < rows:
                    edges.append((index(r, c, 1, k), index(r + 1, c, 1, k)))
    return Topology(len(layout), np.array(edges), layout, f"chimera-{rows}-{cols}-{shore}")


def parse_topology_spec(spec: str) -> Topology:
    """Build a topology from a ``chimera-R-C-S`` string."""
    m = _CHIMERA_RE.match(spec.strip())
    if not m:
        raise ValueError(f"unrecognized topology spec {spec!r}; expected chimera-R-C-S")
    rows, cols, shore = (int(g) for g in m.groups())
    return chimera_topology(rows, cols, shore)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Qubo:
    """Quadratic pseudo-Boolean function on a topology.

    ``linear[i]`` is the weight of ``x_i``; ``quadratic[k]`` the weight of
    ``x_i x_j`` for ``(i, j) = topology.edges[k]``.  ``offset`` is a constant
    term that is zero for every instance generated here but is needed to make
    :func:`from_ising` energy-preserving.
    """

    topology: Topology
    linear: np.ndarray
    quadratic: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        linear = _readonly(self.linear)
        quadratic = _readonly(self.quadratic)
        if linear.shape != (self.topology.num_vars,):
            raise DimensionError("linear weights must have length num_vars")
        if quadratic.shape != (self.topology.num_edges,):
            raise DimensionError("quadratic weights must have one entry per edge")
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "quadratic", quadratic)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_dicts(
        cls,
        topology: Topology,
        linear: Mapping[int, float] | None = None,
        quadratic: Mapping[tuple[int, int], float] | None = None,
        offset: float = 0.0,
    ) -> "Qubo":
        """Build from sparse maps; diagonal quadratic terms fold into linear."""
        lin = np.zeros(topology.num_vars)
        quad = np.zeros(topology.num_edges)
        for i, w in (linear or {}).items():
            if not 0 <= i < topology.num_vars:
                raise KeyError(f"variable {i} out of range")
            lin[i] += w
        for (i, j), w in (quadratic or {}).items():
            if i == j:
                lin[i] += w
                continue
            key = (min(i, j), max(i, j))
            if key not in topology.edge_index:
                raise KeyError(f"{key} is not an edge of the topology")
            quad[topology.edge_index[key]] += w
        return cls(topology, lin, quad, offset)

    @property
    def num_vars(self) -> int:
        return self.topology.num_vars

    @property
    def num_coefficients(self) -> int:
        return self.topology.num_vars + self.topology.num_edges

    def linear_map(self) -> dict[int, float]:
        return {i: float(w) for i, w in enumerate(self.linear) if w != 0.0}

    def quadratic_map(self) -> dict[tuple[int, int], float]:
        return {
            (int(i), int(j)): float(w)
            for (i, j), w in zip(self.topology.edges, self.quadratic)
            if w != 0.0
        }

    def coefficients(self) -> np.ndarray:
        """All coefficients as one flat vector: linear weights, then couplers."""
        return np.concatenate([self.linear, self.quadratic])

    def with_coefficients(self, coeffs: np.ndarray) -> "Qubo":
        n = self.topology.num_vars
        return Qubo(self.topology, coeffs[:n], coeffs[n:], self.offset)

    def __eq__(self, other):
        if not isinstance(other, Qubo):
            return NotImplemented
        return (
            self.topology.same_graph(other.topology)
            and np.array_equal(self.linear, other.linear)
            and np.array_equal(self.quadratic, other.quadratic)
            and self.offset == other.offset
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Spin formulation: ``sum h_i s_i + sum J_ij s_i s_j + offset``."""

    topology: Topology
    h: np.ndarray
    J: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        h, J = _readonly(self.h), _readonly(self.J)
        if h.shape != (self.topology.num_vars,) or J.shape != (self.topology.num_edges,):
            raise DimensionError("h/J shapes do not match the topology")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "offset", float(self.offset))


def _as_rows(x, n: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[-1] != n:
        raise DimensionError(f"expected length {n}, got {x.shape[-1]}")
    return x.astype(float)


def qubo_energy(q: Qubo, x) -> float | np.ndarray:
    """Energy of bit string ``x``, or of every row when ``x`` is 2D."""
    x = _as_rows(x, q.num_vars)
    i, j = q.topology.edges[:, 0], q.topology.edges[:, 1]
    e = x @ q.linear + (x[..., i] * x[..., j]) @ q.quadratic + q.offset
    return float(e) if np.ndim(e) == 0 else e


def ising_energy(m: IsingModel, s) -> float | np.ndarray:
    s = _as_rows(s, m.topology.num_vars)
    i, j = m.topology.edges[:, 0], m.topology.edges[:, 1]
    e = s @ m.h + (s[..., i] * s[..., j]) @ m.J + m.offset
    return float(e) if np.ndim(e) == 0 else e


def bits_to_spins(x) -> np.ndarray:
    return 2 * np.asarray(x, dtype=np.int8) - 1


def spins_to_bits(s) -> np.ndarray:
    return ((np.asarray(s) + 1) // 2).astype(np.uint8)


def to_ising(q: Qubo) -> IsingModel:
    """Substitute ``x_i = (1 + s_i) / 2``; energies agree on every state."""
    i, j = q.topology.edges[:, 0], q.topology.edges[:, 1]
    h = q.linear / 2
    np.add.at(h, i, q.quadratic / 4)
    np.add.at(h, j, q.quadratic / 4)
    offset = q.offset + q.linear.sum() / 2 + q.quadratic.sum() / 4
    return IsingModel(q.topology, h, q.quadratic / 4, offset)


def from_ising(m: IsingModel) -> Qubo:
    """Inverse of :func:`to_ising` via ``s_i = 2 x_i - 1``."""
    i, j = m.topology.edges[:, 0], m.topology.edges[:, 1]
    linear = 2 * m.h
    np.add.at(linear, i, -2 * m.J)
    np.add.at(linear, j, -2 * m.J)
    offset = m.offset - m.h.sum() + m.J.sum()
    return Qubo(m.topology, linear, 4 * m.J, offset)


def random_qubo(
    t: Topology,
    seed: int,
    linear_range: tuple[float, float] = LINEAR_RANGE,
    quad_range: tuple[float, float] = QUADRATIC_RANGE,
) -> Qubo:
    """Independent uniform weights on every variable and every edge."""
    for lo, hi in (linear_range, quad_range):
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"invalid range ({lo}, {hi})")
    rng = np.random.default_rng(seed)
    linear = rng.uniform(*linear_range, size=t.num_vars)
    quadratic = rng.uniform(*quad_range, size=t.num_edges)
    return Qubo(t, linear, quadratic)


def hamming_distance(x, y) -> int:
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise DimensionError(f"length mismatch: {x.shape} vs {y.shape}")
    return int(np.count_nonzero(x != y))


def exact_minimum(q: Qubo, chunk_bits: int = 16) -> tuple[np.ndarray, float]:
    """Exhaustive minimum over all ``2**n`` bit strings.

    Ties resolve to the lexicographically smallest bit string (``x_0`` is the
    most significant position).
    """
    n = q.num_vars
    if n > EXACT_MAX_VARS:
        raise SizeError(f"exact enumeration is capped at {EXACT_MAX_VARS} variables, got {n}")
    low = min(n, chunk_bits)
    # columns ordered so that x_0 is the most significant bit of the state index
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    base = np.arange(1 << low, dtype=np.int64)
    best_e, best_idx = math.inf, 0
    for hi in range(1 << (n - low)):
        idx = (hi << low) | base
        bits = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        e = qubo_energy(q, bits)
        k = int(np.argmin(e))
        if e[k] < best_e:
            best_e, best_idx = float(e[k]), int(idx[k])
    bits = ((best_idx >> shifts) & 1).astype(np.uint8)
    return bits, best_e


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits))


def str_to_bits(text: str) -> np.ndarray:
    if not set(text) <= {"0", "1"}:
        raise ValueError(f"not a bit string: {text!r}")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


# --- file format -----------------------------------------------------------


def qubo_to_dict(q: Qubo) -> dict:
    d = {
        "num_vars": q.num_vars,
        "topology": {"name": q.topology.name, "edges": q.topology.edges.tolist()},
        "linear": {str(i): float(w) for i, w in enumerate(q.linear)},
        "quadratic": [
            [int(i), int(j), float(w)] for (i, j), w in zip(q.topology.edges, q.quadratic)
        ],
    }
    if q.offset:
        d["offset"] = q.offset
    return d


def qubo_from_dict(d: Mapping, source: str = "<qubo>") -> Qubo:
    def fail(fieldname, msg):
        raise ParseError(f"{source}: field {fieldname!r}: {msg}")

    for key in ("num_vars", "topology", "linear", "quadratic"):
        if key not in d:
            fail(key, "missing")
    n = d["num_vars"]
    if not isinstance(n, int) or n < 1:
        fail("num_vars", f"expected positive integer, got {n!r}")
    topo = d["topology"]
    if not isinstance(topo, Mapping) or "edges" not in topo:
        fail("topology", "expected object with 'name' and 'edges'")
    name = str(topo.get("name", ""))
    try:
        layout = None
        if _CHIMERA_RE.match(name):
            ref = parse_topology_spec(name)
            layout = ref.layout if ref.num_vars == n else None
        t = Topology(n, np.asarray(topo["edges"], dtype=np.int64).reshape(-1, 2), layout, name)
    except (ValueError, TypeError) as exc:
        fail("topology.edges", str(exc))
    linear = {}
    for k, w in d["linear"].items():
        try:
            linear[int(k)] = float(w)
        except (TypeError, ValueError):
            fail(f"linear[{k}]", f"bad entry {w!r}")
    quadratic = {}
    for pos, entry in enumerate(d["quadratic"]):
        try:
            i, j, w = entry
            quadratic[(int(i), int(j))] = float(w)
        except (TypeError, ValueError):
            fail(f"quadratic[{pos}]", f"expected [i, j, weight], got {entry!r}")
    try:
        return Qubo.from_dicts(t, linear, quadratic, float(d.get("offset", 0.0)))
    except (KeyError, DimensionError) as exc:
        fail("quadratic", str(exc))


def save_qubo(q: Qubo, path) -> None:
    Path(path).write_text(json.dumps(qubo_to_dict(q), indent=1) + "\n")


def load_qubo(path) -> Qubo:
    path = Path(path)
    text = path.read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise ParseError(f"{path}: top level must be an object")
    return qubo_from_dict(d, str(path))


def zero_qubo(t: Topology) -> Qubo:
    return Qubo(t, np.zeros(t.num_vars), np.zeros(t.num_edges))


def path_topology(n: int, name: str = "") -> Topology:
    return Topology(n, [(i, i + 1) for i in range(n - 1)], None, name or f"path-{n}")


def complete_topology(n: int) -> Topology:
    return Topology(n, [(i, j) for i in range(n) for j in range(i + 1, n)], None, f"complete-{n}")


def induced_subgraph(t: Topology, keep: Sequence[int] | Iterable[int]) -> Topology:
    """Subgraph on ``keep`` with variables relabelled densely in the given order."""
    keep = list(keep)
    relabel = {v: k for k, v in enumerate(keep)}
    edges = [(relabel[i], relabel[j]) for i, j in t.edges if i in relabel and j in relabel]
    layout = t.layout[keep] if t.layout is not None else None
    return Topology(len(keep), np.array(edges, dtype=np.int64).reshape(-1, 2), layout, f"{t.name}-sub{len(keep)}")
