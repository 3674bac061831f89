"""Piecewise-linear anneal schedules and transverse/problem energy scales.

A schedule is a list of ``(time_us, s)`` points.  The builders here produce
the plain linear ramp, the quench-sliced variant used to read out the state
at an intermediate time, and a pause-then-quench variant.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ParseError, ScheduleConstraintError

DEFAULT_SLOPE_MAX = 1.0
DEFAULT_MAX_POINTS = 50


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


class SchedulePoint(NamedTuple):
    time: float
    s: float


class Violation(NamedTuple):
    kind: str
    message: str


@dataclass(frozen=True)
class AnnealSchedule:
    """Ordered ``(time, s)`` points.

    Construction only normalizes (drops repeated points); constraints are
    checked by :func:`validate` so that invalid schedules can be inspected.
    """

    points: tuple[SchedulePoint, ...]

    @classmethod
    def from_points(cls, points: Iterable[tuple[float, float]]) -> "AnnealSchedule":
        out: list[SchedulePoint] = []
        for t, s in points:
            p = SchedulePoint(float(t), float(s))
            if out and out[-1] == p:
                continue
            out.append(p)
        return cls(tuple(out))

    @property
    def times(self) -> np.ndarray:
        return np.array([p.time for p in self.points])

    @property
    def fractions(self) -> np.ndarray:
        return np.array([p.s for p in self.points])

    @property
    def total_time(self) -> float:
        return self.points[-1].time

    def fraction_at(self, t):
        """Anneal fraction at time(s) ``t`` by linear interpolation."""
        return np.interp(t, self.times, self.fractions)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("time_us,s\n")
        for t, s in self.points:
            buf.write(f"{fmt17(t)},{fmt17(s)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "AnnealSchedule":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["time_us", "s"]:
            raise ParseError("schedule CSV: expected header 'time_us,s'")
        pts = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                pts.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise ParseError(f"schedule CSV line {lineno}: bad row {row!r}") from None
        return cls.from_points(pts)


def validate(
    sch: AnnealSchedule,
    slope_max: float = DEFAULT_SLOPE_MAX,
    max_points: int = DEFAULT_MAX_POINTS,
) -> list[Violation]:
    """Every constraint the schedule breaks; empty means valid."""
    v: list[Violation] = []
    pts = sch.points
    if len(pts) > max_points:
        v.append(Violation("point_count", f"{len(pts)} points exceeds the limit of {max_points}"))
    if len(pts) < 2:
        v.append(Violation("point_count", "a schedule needs at least two points"))
        return v
    if pts[0] != (0.0, 0.0):
        v.append(Violation("endpoint", f"first point must be (0, 0), got {tuple(pts[0])}"))
    if pts[-1].s != 1.0:
        v.append(Violation("endpoint", f"last point must have s = 1, got {pts[-1].s}"))
    for k, (t, s) in enumerate(pts):
        if t < 0 or not 0.0 <= s <= 1.0:
            v.append(Violation("range", f"point {k} ({t}, {s}) out of range"))
    for k, (a, b) in enumerate(zip(pts, pts[1:])):
        dt, ds = b.time - a.time, b.s - a.s
        if dt <= 0:
            v.append(Violation("monotonicity", f"time not strictly increasing at point {k + 1}"))
            continue
        if ds < 0:
            v.append(Violation("monotonicity", f"anneal fraction decreases at point {k + 1}"))
        if ds / dt > slope_max:
            v.append(
                Violation("slope", f"segment {k} rises at {ds / dt:g} per us, limit {slope_max:g}")
            )
    return v


def check(sch: AnnealSchedule, slope_max: float = DEFAULT_SLOPE_MAX,
          max_points: int = DEFAULT_MAX_POINTS) -> AnnealSchedule:
    problems = validate(sch, slope_max, max_points)
    if problems:
        raise ScheduleConstraintError("; ".join(p.message for p in problems))
    return sch


def standard_schedule(total_time: float) -> AnnealSchedule:
    if not total_time > 0:
        raise ValueError(f"total_time must be positive, got {total_time}")
    return AnnealSchedule.from_points([(0.0, 0.0), (total_time, 1.0)])


def _check_slice_args(total_time, slice_time, quench_duration):
    if not total_time > 0:
        raise ValueError(f"total_time must be positive, got {total_time}")
    if not 0 < slice_time <= total_time:
        raise ValueError(f"slice_time must lie in (0, {total_time}], got {slice_time}")
    if not quench_duration > 0:
        raise ValueError(f"quench_duration must be positive, got {quench_duration}")


def sliced_schedule(
    total_time: float,
    slice_time: float,
    quench_duration: float = 1.0,
    slope_max: float = DEFAULT_SLOPE_MAX,
) -> AnnealSchedule:
    """Follow the linear ramp up to ``slice_time``, then quench to ``s = 1``.

    Slicing at ``total_time`` returns the plain ramp.  When the quench would
    end after ``total_time`` it still takes ``quench_duration``, so the
    schedule runs slightly past the nominal anneal time.
    """
    _check_slice_args(total_time, slice_time, quench_duration)
    if slice_time == total_time:
        return standard_schedule(total_time)
    sch = AnnealSchedule.from_points(
        [(0.0, 0.0), (slice_time, slice_time / total_time), (slice_time + quench_duration, 1.0)]
    )
    return check(sch, slope_max)


def pause_then_quench_schedule(
    total_time: float,
    slice_time: float,
    quench_duration: float = 1.0,
    slope_max: float = DEFAULT_SLOPE_MAX,
) -> AnnealSchedule:
    """Ramp to ``slice_time``, hold the fraction, and quench at the very end."""
    _check_slice_args(total_time, slice_time, quench_duration)
    if slice_time + quench_duration > total_time:
        raise ValueError("slice_time + quench_duration must not exceed total_time")
    s_slice = slice_time / total_time
    sch = AnnealSchedule.from_points(
        [
            (0.0, 0.0),
            (slice_time, s_slice),
            (total_time - quench_duration, s_slice),
            (total_time, 1.0),
        ]
    )
    return check(sch, slope_max)


# --- energy scales -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnergyScaleTable:
    """Rows of ``(s, A_GHz, B_GHz)``; interpolated linearly in ``s``."""

    s: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        s, A, B = (np.array(a, dtype=float) for a in (self.s, self.A, self.B))
        if not (s.ndim == 1 and s.shape == A.shape == B.shape and len(s) >= 2):
            raise ValueError("energy scale table needs at least two rows of (s, A, B)")
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise ValueError("table s values must increase strictly from 0 to 1")
        if np.any(np.diff(A) > 0) or np.any(np.diff(B) < 0):
            raise ValueError("A must be non-increasing and B non-decreasing in s")
        for name, a in (("s", s), ("A", A), ("B", B)):
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @classmethod
    def from_csv(cls, text: str, source: str = "<table>") -> "EnergyScaleTable":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["s", "A_GHz", "B_GHz"]:
            raise ParseError(f"{source}: expected header 's,A_GHz,B_GHz'")
        data = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            try:
                data.append([float(c) for c in row[:3]])
                if len(row) < 3:
                    raise ValueError
            except ValueError:
                raise ParseError(f"{source}: line {lineno}: bad row {row!r}") from None
        arr = np.array(data).reshape(-1, 3)
        try:
            return cls(arr[:, 0], arr[:, 1], arr[:, 2])
        except ValueError as exc:
            raise ParseError(f"{source}: {exc}") from None

    @classmethod
    def load(cls, path) -> "EnergyScaleTable":
        return cls.from_csv(Path(path).read_text(), str(path))

    def to_csv(self) -> str:
        lines = ["s,A_GHz,B_GHz"]
        lines += [f"{fmt17(s)},{fmt17(a)},{fmt17(b)}" for s, a, b in zip(self.s, self.A, self.B)]
        return "\n".join(lines) + "\n"


def interpolate_energy_scales(table: EnergyScaleTable, s) -> tuple:
    """``(A(s), B(s))``; ``s`` may be a scalar or an array."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > 1):
        raise ValueError(f"anneal fraction must lie in [0, 1], got {s}")
    A = np.interp(s_arr, table.s, table.A)
    B = np.interp(s_arr, table.s, table.B)
    if s_arr.ndim == 0:
        return float(A), float(B)
    return A, B


def _default_table() -> EnergyScaleTable:
    # Stand-in shape only: A decays from 6 GHz to 0, B grows linearly to 12 GHz.
    s = np.linspace(0.0, 1.0, 21)
    return EnergyScaleTable(s, 6.0 * (1.0 - s) ** 2, 12.0 * s)


DEFAULT_ENERGY_SCALES = _default_table()
