"""Minimal SVG line charts (axes, polylines, legend)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 50


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    return f"{v:g}"


def line_chart(series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
               log_y: bool = False) -> str:
    """Render ``{label: [(x, y), ...]}`` as an SVG document string.

    With ``log_y`` the vertical axis is log10; non-positive values are dropped.
    """
    pts = {}
    for label, xy in series.items():
        xy = sorted((float(x), float(y)) for x, y in xy)
        if log_y:
            xy = [(x, y) for x, y in xy if y > 0]
        pts[label] = xy
    xs = [x for xy in pts.values() for x, _ in xy]
    ys = [y for xy in pts.values() for _, y in xy]
    if not xs:
        raise ValueError("nothing to plot")
    fy = math.log10 if log_y else (lambda v: v)
    x0, x1 = min(xs), max(xs)
    y0, y1 = fy(min(ys)), fy(max(ys))
    if log_y:
        y0, y1 = math.floor(y0), math.ceil(y1)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN_T + ph - (fy(y) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="22" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    bottom = MARGIN_T + ph
    out.append(f'<line x1="{MARGIN_L}" y1="{bottom}" x2="{MARGIN_L + pw}" y2="{bottom}" stroke="black"/>')
    out.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{bottom}" stroke="black"/>')
    for t in _nice_ticks(x0, x1):
        x = sx(t)
        out.append(f'<line x1="{x:.1f}" y1="{bottom}" x2="{x:.1f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{bottom + 18}" text-anchor="middle">{_fmt_tick(t)}</text>')
    yticks = range(int(y0), int(y1) + 1) if log_y else _nice_ticks(y0, y1)
    for t in yticks:
        y = MARGIN_T + ph - (t - y0) / (y1 - y0) * ph
        label = f"1e{t}" if log_y else _fmt_tick(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.1f}" x2="{MARGIN_L}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end">{label}</text>')
    if xlabel:
        out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 10}" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cy = MARGIN_T + ph / 2
        out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {cy:.1f})">{escape(ylabel)}</text>')
    for i, (label, xy) in enumerate(pts.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in xy)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}">'
                   f'<title>{escape(str(label))}</title></polyline>')
        ly = MARGIN_T + 10 + 18 * i
        lx = WIDTH - MARGIN_R + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
