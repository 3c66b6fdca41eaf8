"""Minimal SVG line charts: one <polyline> per series, tick labels and a legend."""
from __future__ import annotations
import math
from dataclasses import dataclass
from html import escape
from typing import Sequence

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f")
WIDTH, HEIGHT = 640, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 20, 55


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi):
        return []
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        if v >= lo - 1e-9 * step:
            ticks.append(round(v, 12))
        v += step
    return ticks


def line_chart(series: Sequence[Series], x_label: str, y_label: str, title: str = "") -> str:
    """Render `series` on shared axes. Non-finite points are dropped."""
    cleaned = []
    for s in series:
        x = np.asarray(s.x, dtype=np.float64)
        y = np.asarray(s.y, dtype=np.float64)
        ok = np.isfinite(x) & np.isfinite(y)
        cleaned.append((s.label, x[ok], y[ok]))
    xs = np.concatenate([c[1] for c in cleaned]) if cleaned else np.zeros(0)
    ys = np.concatenate([c[2] for c in cleaned]) if cleaned else np.zeros(0)
    x_lo, x_hi = (float(xs.min()), float(xs.max())) if len(xs) else (0.0, 1.0)
    y_lo, y_hi = (min(0.0, float(ys.min())), float(ys.max())) if len(ys) else (0.0, 1.0)
    x_lo = min(0.0, x_lo)
    xt, yt = nice_ticks(x_lo, x_hi), nice_ticks(y_lo, y_hi)
    if xt:
        x_lo, x_hi = min(x_lo, xt[0]), max(x_hi, xt[-1])
    if yt:
        y_lo, y_hi = min(y_lo, yt[0]), max(y_hi, yt[-1])
    x_hi = x_hi if x_hi > x_lo else x_lo + 1.0
    y_hi = y_hi if y_hi > y_lo else y_lo + 1.0

    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(v: float) -> float:
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return MARGIN_TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    out.append(f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    for v in xt:
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_TOP + ph}" x2="{x:.2f}" '
                   f'y2="{MARGIN_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_TOP + ph + 18}" '
                   f'text-anchor="middle">{v:g}</text>')
    for v in yt:
        y = py(v)
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{y:.2f}" x2="{MARGIN_LEFT}" '
                   f'y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{y + 4:.2f}" '
                   f'text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{MARGIN_LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="16" y="{MARGIN_TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_TOP + ph / 2:.1f})">{escape(y_label)}</text>')

    for k, (label, x, y) in enumerate(cleaned):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x.tolist(), y.tolist()))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')

    out.append('<g class="legend">')
    for k, (label, _, _) in enumerate(cleaned):
        color = PALETTE[k % len(PALETTE)]
        ly = MARGIN_TOP + 14 + 16 * k
        lx = MARGIN_LEFT + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
