"""Minimal deterministic SVG line plots.

Hand-rolled rather than delegated to a plotting library so that identical
inputs produce byte-identical files.  Supports linear and logarithmic axes,
several labelled series and an optional reference-slope guide line for
log-log refinement plots.
"""

from __future__ import annotations

import math
import warnings
from typing import List, Optional, Sequence

_WIDTH, _HEIGHT = 640.0, 440.0
_ML, _MR, _MT, _MB = 70.0, 20.0, 34.0, 50.0
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _transform(values, lo, hi, out_lo, out_hi, log):
    if log:
        lo, hi = math.log10(lo), math.log10(hi)
        values = [math.log10(v) for v in values]
    span = hi - lo if hi > lo else 1.0
    return [out_lo + (v - lo) * (out_hi - out_lo) / span for v in values]


def _ticks(lo: float, hi: float, log: bool) -> List[float]:
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        step = max(1, (hi_e - lo_e) // 6)
        return [10.0 ** e for e in range(lo_e, hi_e + 1, step)]
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1.0, 2.0, 5.0, 10.0) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * abs(step):
        ticks.append(0.0 if abs(v) < 1e-15 * abs(step) else v)
        v += step
    return ticks


def line_plot_svg(
    path: str,
    series: Sequence[tuple],
    title: str,
    xlabel: str,
    ylabel: str,
    xlog: bool = False,
    ylog: bool = False,
    guide_slope: Optional[float] = None,
) -> None:
    """Write an SVG line plot.

    Args:
        series: sequence of (xs, ys, label) triples.
        guide_slope: if set (with log axes), draw a dashed power-law guide
            anchored at the first point of the first series.
    """
    cleaned = []
    for xs, ys, label in series:
        pts = [
            (float(x), float(y))
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y)
            and (not xlog or x > 0) and (not ylog or y > 0)
        ]
        if pts:
            cleaned.append((pts, label))
    if not cleaned:
        raise ValueError("nothing to plot")

    all_x = [p[0] for pts, _ in cleaned for p in pts]
    all_y = [p[1] for pts, _ in cleaned for p in pts]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if not ylog and y_hi > y_lo:
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    x0, x1 = _ML, _WIDTH - _MR
    y0, y1 = _HEIGHT - _MB, _MT

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" '
        f'height="{_HEIGHT:.0f}" viewBox="0 0 {_WIDTH:.0f} {_HEIGHT:.0f}">',
        f'<rect width="{_WIDTH:.0f}" height="{_HEIGHT:.0f}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]

    for tv in _ticks(x_lo, x_hi, xlog):
        px = _transform([tv], x_lo, x_hi, x0, x1, xlog)[0]
        parts.append(
            f'<line x1="{px:.2f}" y1="{y0:.2f}" x2="{px:.2f}" y2="{y1:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{y0 + 18:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tv)}</text>'
        )
    for tv in _ticks(y_lo, y_hi, ylog):
        py = _transform([tv], y_lo, y_hi, y0, y1, ylog)[0]
        parts.append(
            f'<line x1="{x0:.2f}" y1="{py:.2f}" x2="{x1:.2f}" y2="{py:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x0 - 6:.2f}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(tv)}</text>'
        )

    parts.append(
        f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" '
        f'height="{y0 - y1:.2f}" fill="none" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{_HEIGHT - 12:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{ylabel}</text>'
    )

    if guide_slope is not None and xlog and ylog:
        pts0 = cleaned[0][0]
        gx0, gy0 = pts0[0]
        gx1 = pts0[-1][0]
        gy1 = gy0 * (gx1 / gx0) ** guide_slope
        gpx = _transform([gx0, gx1], x_lo, x_hi, x0, x1, True)
        gpy = _transform([gy0, gy1], y_lo, y_hi, y0, y1, True)
        parts.append(
            f'<line x1="{gpx[0]:.2f}" y1="{gpy[0]:.2f}" x2="{gpx[1]:.2f}" '
            f'y2="{gpy[1]:.2f}" stroke="#888888" stroke-width="1" '
            f'stroke-dasharray="6 4"/>'
        )
        parts.append(
            f'<text x="{gpx[1] - 4:.2f}" y="{gpy[1] - 6:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="#888888">'
            f"slope {_fmt(guide_slope)}</text>"
        )

    for idx, (pts, label) in enumerate(cleaned):
        color = _PALETTE[idx % len(_PALETTE)]
        px = _transform([p[0] for p in pts], x_lo, x_hi, x0, x1, xlog)
        py = _transform([p[1] for p in pts], y_lo, y_hi, y0, y1, ylog)
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = _MT + 16 + 16 * idx
        parts.append(
            f'<line x1="{x1 - 110:.2f}" y1="{ly - 4:.2f}" x2="{x1 - 90:.2f}" '
            f'y2="{ly - 4:.2f}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{x1 - 84:.2f}" y="{ly:.2f}" font-family="sans-serif" '
            f'font-size="11">{label}</text>'
        )

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def try_plot(fn, *args, **kwargs) -> None:
    """Run a plotting call, downgrading any failure to a warning."""
    try:
        fn(*args, **kwargs)
    except Exception as exc:  # plots are best-effort
        warnings.warn(f"plot generation failed: {exc}", RuntimeWarning)
