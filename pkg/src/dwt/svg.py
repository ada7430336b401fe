"""Minimal self-contained SVG log-log plots (fixed 800x600 canvas)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 600
_LEFT, _RIGHT, _TOP, _BOTTOM = 90, 30, 50, 70


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, target: int = 8) -> list[int]:
    step = max(1, math.ceil((hi - lo) / target))
    first = math.ceil(lo / step) * step
    return list(range(first, math.floor(hi) + 1, step))


def loglog_plot(
    log_x: list[float],
    log_y: list[float],
    *,
    line: tuple[float, float] | None = None,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    annotation: str = "",
) -> str:
    """Scatter of decimal logarithms with an optional line log_y = slope*log_x + icept."""
    if len(log_x) != len(log_y):
        raise ValueError("x and y lengths differ")
    xs = [x for x in log_x if math.isfinite(x)] or [0.0, 1.0]
    ys = [y for y in log_y if math.isfinite(y)] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    padx, pady = 0.04 * (x1 - x0), 0.04 * (y1 - y0)
    x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
    pw, ph = WIDTH - _LEFT - _RIGHT, HEIGHT - _TOP - _BOTTOM

    def sx(x):
        return _LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return _TOP + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = _fmt(sx(t))
        out.append(f'<line x1="{X}" y1="{_TOP + ph}" x2="{X}" y2="{_TOP + ph + 6}" stroke="black"/>')
        out.append(f'<text x="{X}" y="{_TOP + ph + 22}" text-anchor="middle">1e{t}</text>')
    for t in _ticks(y0, y1):
        Y = _fmt(sy(t))
        out.append(f'<line x1="{_LEFT - 6}" y1="{Y}" x2="{_LEFT}" y2="{Y}" stroke="black"/>')
        out.append(f'<text x="{_LEFT - 10}" y="{Y}" text-anchor="end" dominant-baseline="middle">1e{t}</text>')
    if line is not None:
        slope, icept = line
        out.append(
            f'<line x1="{_fmt(sx(x0))}" y1="{_fmt(sy(slope * x0 + icept))}" '
            f'x2="{_fmt(sx(x1))}" y2="{_fmt(sy(slope * x1 + icept))}" stroke="crimson" stroke-width="1.5"/>'
        )
    for x, y in zip(log_x, log_y):
        if math.isfinite(x) and math.isfinite(y):
            out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" fill="steelblue"/>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.0f}" y="30" text-anchor="middle" font-size="16">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{_LEFT + pw / 2:.0f}" y="{HEIGHT - 20}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="24" y="{_TOP + ph / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 24 {_TOP + ph / 2:.0f})">{escape(ylabel)}</text>'
        )
    if annotation:
        out.append(f'<text x="{WIDTH - _RIGHT - 12}" y="{_TOP + 24}" text-anchor="end" font-size="15">{escape(annotation)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
