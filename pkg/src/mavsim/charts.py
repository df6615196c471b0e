"""Self-contained SVG charts built from plain line, circle and rect elements.

Nothing here touches the simulator; every function takes already-aggregated
numbers and returns SVG text, so charts can be rebuilt from CSVs alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f")


@dataclass
class Series:
    label: str
    x: list
    y: list
    color: str | None = None
    style: str = "line"  # "line", "points" or "both"


@dataclass
class Frame:
    """Pixel geometry of one plotting area inside a larger canvas."""

    left: float
    top: float
    width: float
    height: float
    x_range: tuple
    y_range: tuple

    def sx(self, x):
        lo, hi = self.x_range
        return self.left + (x - lo) / (hi - lo) * self.width

    def sy(self, y):
        lo, hi = self.y_range
        return self.top + self.height - (y - lo) / (hi - lo) * self.height


def nice_ticks(lo, hi, target=6):
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + step * 1e-9:
        ticks.append(round(v, 10))
        v += step
    return ticks


def _fmt(v):
    return f"{v:g}" if abs(v) < 1e6 else f"{v:.3g}"


def _axes(out, fr, xlabel, ylabel, x_ticks, y_ticks):
    x0, y0 = fr.left, fr.top + fr.height
    out.append(f'<rect x="{fr.left:.1f}" y="{fr.top:.1f}" width="{fr.width:.1f}" '
               f'height="{fr.height:.1f}" fill="none" stroke="#333"/>')
    for t in x_ticks:
        px = fr.sx(t)
        out.append(f'<line x1="{px:.1f}" y1="{y0:.1f}" x2="{px:.1f}" y2="{y0 + 5:.1f}" stroke="#333"/>')
        out.append(f'<line x1="{px:.1f}" y1="{fr.top:.1f}" x2="{px:.1f}" y2="{y0:.1f}" '
                   f'stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<text x="{px:.1f}" y="{y0 + 18:.1f}" font-size="11" '
                   f'text-anchor="middle">{_fmt(t)}</text>')
    for t in y_ticks:
        py = fr.sy(t)
        out.append(f'<line x1="{x0 - 5:.1f}" y1="{py:.1f}" x2="{x0:.1f}" y2="{py:.1f}" stroke="#333"/>')
        out.append(f'<line x1="{x0:.1f}" y1="{py:.1f}" x2="{fr.left + fr.width:.1f}" y2="{py:.1f}" '
                   f'stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<text x="{x0 - 8:.1f}" y="{py + 4:.1f}" font-size="11" '
                   f'text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{fr.left + fr.width / 2:.1f}" y="{y0 + 38:.1f}" font-size="13" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    cy = fr.top + fr.height / 2
    out.append(f'<text x="{fr.left - 52:.1f}" y="{cy:.1f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 {fr.left - 52:.1f} {cy:.1f})">{escape(ylabel)}</text>')


def _open(width, height, title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" font-size="16" text-anchor="middle">{escape(title)}</text>',
    ]


def _range(values, include_zero=True):
    values = [v for v in values if v is not None and math.isfinite(v)]
    if not values:
        return (0.0, 1.0)
    lo, hi = min(values), max(values)
    if include_zero:
        lo = min(lo, 0.0)
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def line_chart(series, title, xlabel, ylabel, vlines=(), width=800, height=500):
    """Line/scatter chart; ``vlines`` is a list of (x, label) markers."""
    out = _open(width, height, title)
    has_data = any(len(s.x) for s in series)
    xs = [v for s in series for v in s.x] + [x for x, _ in vlines]
    ys = [v for s in series for v in s.y]
    x_ticks = nice_ticks(*_range(xs))
    y_ticks = nice_ticks(*_range(ys))
    fr = Frame(80, 45, width - 250, height - 110, (x_ticks[0], x_ticks[-1]),
               (y_ticks[0], y_ticks[-1]))
    _axes(out, fr, xlabel, ylabel, x_ticks, y_ticks)
    if not has_data:
        out.append(f'<text x="{fr.left + fr.width / 2:.1f}" y="{fr.top + fr.height / 2:.1f}" '
                   f'font-size="14" fill="#888" text-anchor="middle">no data</text>')
    for k, s in enumerate(series):
        color = s.color or PALETTE[k % len(PALETTE)]
        pts = [(fr.sx(x), fr.sy(y)) for x, y in zip(s.x, s.y)]
        if s.style in ("line", "both") and len(pts) > 1:
            path = " ".join(f"{px:.1f},{py:.1f}" for px, py in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if s.style in ("points", "both"):
            out.extend(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2.5" fill="{color}"/>'
                       for px, py in pts)
        ly = fr.top + 10 + 20 * k
        lx = fr.left + fr.width + 20
        out.append(f'<rect x="{lx:.1f}" y="{ly - 8:.1f}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{lx + 18:.1f}" y="{ly + 2:.1f}" font-size="12">{escape(s.label)}</text>')
    for x, label in vlines:
        px = fr.sx(x)
        out.append(f'<line x1="{px:.1f}" y1="{fr.top:.1f}" x2="{px:.1f}" '
                   f'y2="{fr.top + fr.height:.1f}" stroke="#555" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{px + 4:.1f}" y="{fr.top + 14:.1f}" font-size="11" '
                   f'fill="#555">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass
class BarPanel:
    title: str
    categories: list  # x-axis bins, e.g. train sizes
    groups: dict = field(default_factory=dict)  # group label -> list of heights


def bar_panels(panels, title, xlabel, ylabel, columns=3, panel_w=300, panel_h=230):
    """Grid of grouped-bar panels sharing one legend."""
    rows = max(1, math.ceil(len(panels) / columns))
    width = columns * panel_w + 40
    height = rows * panel_h + 90
    out = _open(width, height, title)
    if not panels:
        out.append(f'<text x="{width / 2:.1f}" y="{height / 2:.1f}" font-size="14" fill="#888" '
                   f'text-anchor="middle">no data</text>')
    labels = []
    for p in panels:
        for g in p.groups:
            if g not in labels:
                labels.append(g)
    for idx, p in enumerate(panels):
        r, c = divmod(idx, columns)
        heights = [h for hs in p.groups.values() for h in hs]
        y_ticks = nice_ticks(*_range(heights), target=4)
        fr = Frame(20 + c * panel_w + 60, 50 + r * panel_h + 20, panel_w - 80,
                   panel_h - 85, (0, max(len(p.categories), 1)), (y_ticks[0], y_ticks[-1]))
        out.append(f'<text x="{fr.left + fr.width / 2:.1f}" y="{fr.top - 6:.1f}" font-size="12" '
                   f'text-anchor="middle">{escape(p.title)}</text>')
        out.append(f'<rect x="{fr.left:.1f}" y="{fr.top:.1f}" width="{fr.width:.1f}" '
                   f'height="{fr.height:.1f}" fill="none" stroke="#333"/>')
        for t in y_ticks:
            py = fr.sy(t)
            out.append(f'<text x="{fr.left - 6:.1f}" y="{py + 4:.1f}" font-size="10" '
                       f'text-anchor="end">{_fmt(t)}</text>')
        n_groups = max(len(p.groups), 1)
        slot = fr.width / max(len(p.categories), 1)
        bar_w = slot * 0.8 / n_groups
        for ci, cat in enumerate(p.categories):
            cx = fr.left + ci * slot
            out.append(f'<text x="{cx + slot / 2:.1f}" y="{fr.top + fr.height + 14:.1f}" '
                       f'font-size="10" text-anchor="middle">{escape(str(cat))}</text>')
            for gi, g in enumerate(p.groups):
                h = p.groups[g][ci]
                color = PALETTE[labels.index(g) % len(PALETTE)]
                y_top = fr.sy(h)
                out.append(f'<rect x="{cx + slot * 0.1 + gi * bar_w:.1f}" y="{y_top:.1f}" '
                           f'width="{bar_w:.1f}" height="{fr.top + fr.height - y_top:.1f}" '
                           f'fill="{color}"/>')
        out.append(f'<text x="{fr.left + fr.width / 2:.1f}" y="{fr.top + fr.height + 30:.1f}" '
                   f'font-size="11" text-anchor="middle">{escape(xlabel)}</text>')
        if c == 0:
            cy = fr.top + fr.height / 2
            out.append(f'<text x="{fr.left - 40:.1f}" y="{cy:.1f}" font-size="11" '
                       f'text-anchor="middle" transform="rotate(-90 {fr.left - 40:.1f} {cy:.1f})">'
                       f'{escape(ylabel)}</text>')
    for k, g in enumerate(labels):
        lx = 30 + k * 160
        ly = height - 18
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<rect x="{lx}" y="{ly - 10}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{lx + 18}" y="{ly}" font-size="12">{escape(str(g))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def downsample(x, y, max_points=1500):
    """Bin-average a long series so a chart stays small."""
    n = len(x)
    if n <= max_points:
        return list(x), list(y)
    size = math.ceil(n / max_points)
    xs, ys = [], []
    for s in range(0, n, size):
        chunk = y[s:s + size]
        xs.append(x[s])
        ys.append(sum(chunk) / len(chunk))
    return xs, ys
