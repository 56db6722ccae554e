"""Minimal self-contained SVG line plots for traces and sweeps."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_W, _H = 720, 360
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _nice_ticks(lo, hi, n=6):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step) + 1)]


def _thin(x, y, max_points=4000):
    # keep per-bucket min and max so switching ripple stays visible
    if len(x) <= max_points:
        return x, y
    buckets = max_points // 2
    edges = np.linspace(0, len(x), buckets + 1).astype(int)
    xs, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        seg = y[a:b]
        i0, i1 = sorted((int(np.nanargmin(seg)), int(np.nanargmax(seg))))
        xs += [x[a + i0], x[a + i1]]
        ys += [seg[i0], seg[i1]]
    return np.array(xs), np.array(ys)


def line_plot(path, series: Sequence[tuple], title: str = "", xlabel: str = "", ylabel: str = "",
              vline: Optional[float] = None, vline_label: str = "", logy: bool = False,
              markers: bool = False) -> Path:
    """Write a line plot.

    ``series`` is a sequence of ``(label, x, y)``. Non-finite points are
    dropped. ``vline`` draws a dotted vertical marker (e.g. a predicted cutoff).
    """
    prepared = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if logy:
            y = np.where(y > 0, y, np.nan)
            y = np.log10(y)
        ok = np.isfinite(x) & np.isfinite(y)
        prepared.append((label, *_thin(x[ok], y[ok])))
    allx = np.concatenate([p[1] for p in prepared] + ([np.array([vline])] if vline is not None else []))
    ally = np.concatenate([p[2] for p in prepared])
    x0, x1 = (float(allx.min()), float(allx.max())) if allx.size else (0.0, 1.0)
    y0, y1 = (float(ally.min()), float(ally.max())) if ally.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def sx(v):
        return _ML + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return _MT + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{_ML + pw / 2}" y="{_H - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="15" y="{_MT + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 15 {_MT + ph / 2})">{escape(ylabel)}</text>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{_MT + ph}" x2="{sx(t):.2f}" y2="{_MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{_MT + ph + 16}" text-anchor="middle">{t:.4g}</text>')
    for t in _nice_ticks(y0, y1):
        lab = f"1e{t:.3g}" if logy else f"{t:.4g}"
        out.append(f'<line x1="{_ML - 4}" y1="{sy(t):.2f}" x2="{_ML}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{lab}</text>')
    for i, (label, x, y) in enumerate(prepared):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        if markers:
            out += [f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{color}"/>' for a, b in zip(x, y)]
        out.append(f'<text x="{_ML + pw - 8}" y="{_MT + 14 + 14 * i}" text-anchor="end" fill="{color}">{escape(label)}</text>')
    if vline is not None:
        out.append(f'<line x1="{sx(vline):.2f}" y1="{_MT}" x2="{sx(vline):.2f}" y2="{_MT + ph}" '
                   f'stroke="black" stroke-dasharray="3,3"/>')
        if vline_label:
            out.append(f'<text x="{sx(vline) + 4:.2f}" y="{_MT + 12}">{escape(vline_label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path
