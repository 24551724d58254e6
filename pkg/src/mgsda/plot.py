"""Minimal SVG line chart for sweep aggregates (no plotting library needed)."""
from __future__ import annotations

from collections import OrderedDict
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 170, 40, 70
TICKS = 10
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _series(rows):
    """Group aggregate rows into series keyed by (structure, rho, p), theta-sorted."""
    groups: OrderedDict = OrderedDict()
    for r in sorted(rows, key=lambda r: (r["structure"], r["rho"], r["p"], r["theta"])):
        if not np.isfinite(r["mean_hamming"]):
            continue  # every replicate of this cell failed
        groups.setdefault((r["structure"], r["rho"], r["p"]), []).append((r["theta"], r["mean_hamming"]))
    return groups


def _label(key, keys):
    structure, rho, p = key
    parts = [f"p={p}"]
    if len({k[1] for k in keys}) > 1:
        parts.append(f"rho={rho:g}")
    if len({k[0] for k in keys}) > 1:
        parts.append(structure)
    return ", ".join(parts)


def _axis_range(values):
    lo, hi = float(min(values)), float(max(values))
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


class _Map:
    """Affine map from data coordinates to the plotting rectangle."""

    def __init__(self, xr, yr):
        self.x0, self.x1 = xr
        self.y0, self.y1 = yr
        self.left, self.right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        self.top, self.bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM

    def x(self, v):
        return self.left + (v - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def y(self, v):
        return self.bottom - (v - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)


def render_svg(rows, title: str = "Support recovery") -> str:
    """SVG text: x = theta, y = mean Hamming distance, one polyline per series.

    Both axes carry ``TICKS`` equal intervals with labels at every tick.
    Raises ``ValueError`` when no finite point is available.
    """
    series = _series(rows)
    if not series:
        raise ValueError("no finite aggregate points to plot")
    xs = [t for pts in series.values() for t, _ in pts]
    ys = [h for pts in series.values() for _, h in pts]
    m = _Map(_axis_range(xs), (0.0, _axis_range([0.0] + ys)[1]))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(m.left + m.right) / 2:.2f}" y="24" text-anchor="middle" font-size="15">'
        f"{escape(title)}</text>",
        f'<g class="axes" stroke="black" stroke-width="1">'
        f'<line x1="{m.left}" y1="{m.bottom}" x2="{m.right}" y2="{m.bottom}"/>'
        f'<line x1="{m.left}" y1="{m.bottom}" x2="{m.left}" y2="{m.top}"/></g>',
    ]
    ticks = ['<g class="ticks">']
    for i in range(TICKS + 1):
        xv = m.x0 + i * (m.x1 - m.x0) / TICKS
        yv = m.y0 + i * (m.y1 - m.y0) / TICKS
        px, py = m.x(xv), m.y(yv)
        ticks.append(f'<line x1="{px:.2f}" y1="{m.bottom}" x2="{px:.2f}" y2="{m.bottom + 5}" stroke="black"/>')
        ticks.append(f'<text x="{px:.2f}" y="{m.bottom + 20}" text-anchor="middle">{xv:.3g}</text>')
        ticks.append(f'<line x1="{m.left - 5}" y1="{py:.2f}" x2="{m.left}" y2="{py:.2f}" stroke="black"/>')
        ticks.append(f'<text x="{m.left - 8}" y="{py + 4:.2f}" text-anchor="end">{yv:.3g}</text>')
    ticks.append("</g>")
    out += ticks
    out.append(
        f'<text x="{(m.left + m.right) / 2:.2f}" y="{HEIGHT - 20}" text-anchor="middle">'
        "rescaled sample size n / (s log p)</text>"
    )
    out.append(
        f'<text x="20" y="{(m.top + m.bottom) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {(m.top + m.bottom) / 2:.2f})">mean Hamming distance</text>'
    )

    keys = list(series)
    for i, key in enumerate(keys):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{m.x(t):.4f},{m.y(h):.4f}" for t, h in series[key])
        out.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = m.top + 10 + 20 * i
        lx = m.right + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{escape(_label(key, keys))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
