"""Matplotlib figures for slice sweeps and GA runs, written straight to files.

Figures are built with :class:`matplotlib.figure.Figure` directly so that no
global pyplot state or interactive backend is involved.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from matplotlib.figure import Figure

from .analysis import SliceSweep, normalize_by_min
from .genetic import HistoryRow

FIGSIZE = (6.4, 4.0)
DPI = 120


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    return path


def plot_energy_evolution(sweep: SliceSweep, path, title: str = "") -> Path:
    """Top-k mean energy per slice with one-standard-deviation error bars."""
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    x = sweep.series("slice_time")
    ax.errorbar(x, sweep.series("energy_mean"), yerr=sweep.series("energy_std"),
                fmt=".", ms=3, lw=0.6, capsize=1.5, color="tab:blue", label="top-k mean")
    m1 = sweep.series("min1pct_mean")
    if np.isfinite(m1).all():
        ax.plot(x, m1, "-", lw=1, color="tab:red", label="min 1% mean")
    ax.set_xlabel("slice time (us)")
    ax.set_ylabel("energy")
    ax.set_title(title or "Energy evolution")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_hamming_evolution(sweep: SliceSweep, path, title: str = "") -> Path:
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    x = sweep.series("slice_time")[1:]
    ax.plot(x, sweep.adjacent_hamming, ".-", ms=3, lw=0.6, color="tab:green")
    ax.set_xlabel("slice time (us)")
    ax.set_ylabel("Hamming distance to previous slice")
    ax.set_title(title or "Hamming distance between adjacent slices")
    return _save(fig, path)


def plot_normalized_comparison(series: Mapping[str, Sequence[float]], path,
                               times: Sequence[float] | None = None) -> Path:
    """Several min-1% curves, each divided by its own minimum."""
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    for label, values in series.items():
        x = np.arange(1, len(values) + 1) if times is None else times
        ax.plot(x, normalize_by_min(values), lw=1, label=label)
    ax.set_xlabel("slice")
    ax.set_ylabel("normalized min 1% energy")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_ga_history(history: Sequence[HistoryRow], path) -> Path:
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    it = [r.iteration for r in history]
    ax.plot(it, [r.best_fitness for r in history], lw=1, label="population best")
    ax.plot(it, [r.mean_fitness for r in history], lw=1, label="population mean")
    ax.plot(it, [r.best_so_far for r in history], "--", lw=1, label="best so far")
    ax.set_xlabel("iteration")
    ax.set_ylabel("fitness")
    ax.legend(frameon=False)
    return _save(fig, path)
