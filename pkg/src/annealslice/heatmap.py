"""Dependency-free SVG rendering of per-qubit flip rates on a topology."""
from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

from .analysis import HeatmapCell
from .qubo import Topology
from .schedule import fmt17

SCALE = 24.0
MARGIN = 30.0
RADIUS = 8.0
LEGEND_HEIGHT = 60.0


def _xy(cell_x: float, cell_y: float) -> tuple[str, str]:
    return f"{MARGIN + cell_x * SCALE:.2f}", f"{MARGIN + cell_y * SCALE:.2f}"


def render_heatmap_svg(cells: Sequence[HeatmapCell], topology: Topology, title: str = "") -> str:
    """SVG document with one ``circle.qubit`` per cell and a min/max legend.

    Couplers are drawn as thin grey lines underneath the qubits.
    """
    xs = [c.x for c in cells] or [0.0]
    ys = [c.y for c in cells] or [0.0]
    width = 2 * MARGIN + (max(xs) - min(0.0, min(xs))) * SCALE
    height = 2 * MARGIN + (max(ys) - min(0.0, min(ys))) * SCALE + LEGEND_HEIGHT
    pos = {c.var: (c.x, c.y) for c in cells}
    rates = [c.rate for c in cells] or [0.0]
    lo, hi = min(rates), max(rates)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f"<title>{escape(title or 'qubit flip rates')}</title>",
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        '<g class="couplers" stroke="#c8c8c8" stroke-width="0.8">',
    ]
    for i, j in topology.edges:
        if int(i) in pos and int(j) in pos:
            x1, y1 = _xy(*pos[int(i)])
            x2, y2 = _xy(*pos[int(j)])
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")
    out.append('<g class="qubits" stroke="#333333" stroke-width="0.5">')
    for c in cells:
        cx, cy = _xy(c.x, c.y)
        out.append(
            f'<circle class="qubit" data-var="{c.var}" data-rate="{fmt17(c.rate)}" '
            f'cx="{cx}" cy="{cy}" r="{RADIUS:.1f}" fill="{c.color}"/>'
        )
    out.append("</g>")

    ly = height - LEGEND_HEIGHT + 15
    out += [
        "<defs>",
        '<linearGradient id="rate-scale" x1="0" x2="1" y1="0" y2="0">',
        '<stop offset="0" stop-color="#0000ff"/>',
        '<stop offset="1" stop-color="#ff0000"/>',
        "</linearGradient>",
        "</defs>",
        '<g class="legend" font-family="sans-serif" font-size="11">',
        f'<rect x="{MARGIN:.2f}" y="{ly:.2f}" width="160" height="12" fill="url(#rate-scale)"/>',
        f'<text x="{MARGIN:.2f}" y="{ly + 28:.2f}">min {lo:.4g}</text>',
        f'<text x="{MARGIN + 160:.2f}" y="{ly + 28:.2f}" text-anchor="end">max {hi:.4g}</text>',
        "</g>",
        "</svg>",
    ]
    return "\n".join(out) + "\n"
