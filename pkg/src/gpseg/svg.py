"""Dependency-free SVG line charts for sweep reports.

Self-contained files: fixed viewport, axes with tick labels, one polyline per
series, optional log scales and a least-squares slope annotation for log-log
trend plots.  Deliberately minimal; reports must render with zero tooling.
"""

from __future__ import annotations

import math

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 36, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        return [10.0**e for e in range(int(lo_e), int(hi_e) + 1)]
    span = hi - lo or 1.0
    step = 10.0 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * span:
        out.append(t)
        t += step
    return out


def line_chart(
    path,
    series: list[tuple[str, list[float], list[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    log_x: bool = False,
    log_y: bool = False,
    slope_annotation: bool = False,
) -> None:
    """Write a line chart; `series` is a list of (label, xs, ys)."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]

    def tx(v):
        return math.log10(v) if log_x else v

    def ty(v):
        return math.log10(max(v, 1e-300)) if log_y else v

    x_lo, x_hi = min(map(tx, xs_all)), max(map(tx, xs_all))
    y_lo, y_hi = min(map(ty, ys_all)), max(map(ty, ys_all))
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    padx = 0.04 * (x_hi - x_lo)
    pady = 0.08 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - padx, x_hi + padx
    y_lo, y_hi = y_lo - pady, y_hi + pady

    def px(v):
        return _ML + (tx(v) - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(v):
        return _H - _MB - (ty(v) - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        f'fill="none" stroke="#888"/>',
    ]
    for t in _ticks(10.0**x_lo if log_x else x_lo, 10.0**x_hi if log_x else x_hi, log_x):
        if not (x_lo - 1e-9 <= tx(t) <= x_hi + 1e-9):
            continue
        x = px(t)
        out.append(f'<line x1="{x:.1f}" y1="{_H-_MB}" x2="{x:.1f}" y2="{_H-_MB+5}" stroke="#444"/>')
        out.append(f'<text x="{x:.1f}" y="{_H-_MB+18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(10.0**y_lo if log_y else y_lo, 10.0**y_hi if log_y else y_hi, log_y):
        if not (y_lo - 1e-9 <= ty(t) <= y_hi + 1e-9):
            continue
        y = py(t)
        out.append(f'<line x1="{_ML-5}" y1="{y:.1f}" x2="{_ML}" y2="{y:.1f}" stroke="#444"/>')
        out.append(f'<text x="{_ML-8}" y="{y+4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{_W/2:.1f}" y="{_H-12}" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="16" y="{_H/2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_H/2:.1f})">{ylabel}</text>'
    )
    for k, (label, xs, ys) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        out.append(
            f'<text x="{_W-_MR-6}" y="{_MT+16+14*k}" text-anchor="end" fill="{color}">{label}</text>'
        )
    if slope_annotation and series and len(series[0][1]) >= 2:
        _, xs, ys = series[0]
        lx = [tx(x) for x in xs]
        ly = [ty(y) for y in ys]
        n = len(lx)
        mx, my = sum(lx) / n, sum(ly) / n
        den = sum((x - mx) ** 2 for x in lx)
        slope = sum((x - mx) * (y - my) for x, y in zip(lx, ly)) / den if den else 0.0
        out.append(
            f'<text x="{_ML+10}" y="{_MT+16}" fill="#444">least-squares slope = {slope:.3f}</text>'
        )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
