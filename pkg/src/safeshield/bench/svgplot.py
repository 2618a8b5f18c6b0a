"""Minimal SVG line plots (learning curves with CI bands), no dependencies."""

from __future__ import annotations

import numpy as np

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf"]
_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _scale(vals, lo, hi, out_lo, out_hi):
    if hi - lo <= 0:
        hi = lo + 1.0
    return out_lo + (np.asarray(vals, float) - lo) * (out_hi - out_lo) / (hi - lo)


def _ticks(lo, hi, n=5):
    if not np.isfinite(lo) or not np.isfinite(hi) or hi <= lo:
        return [lo]
    step = 10 ** np.floor(np.log10((hi - lo) / n))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= n:
            step *= mult
            break
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + step / 2, step))


def line_plot(series: list[dict], title: str, xlabel: str, ylabel: str) -> str:
    """Render curves to an SVG string.

    Each series dict: {"label", "x", "y", optional "band": (lo, hi)}.
    """
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = []
    for s in series:
        ys.append(np.asarray(s["y"], float))
        if s.get("band") is not None:
            ys.extend([np.asarray(s["band"][0], float),
                       np.asarray(s["band"][1], float)])
    ys = np.concatenate(ys)
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(np.nanmin(ys)), float(np.nanmax(ys))
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(v):
        return _scale(v, x_lo, x_hi, _ML, _W - _MR)

    def py(v):
        return _scale(v, y_lo, y_hi, _H - _MB, _MT)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
             f'height="{_H}" viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>',
             f'<text x="{_W/2:.0f}" y="18" text-anchor="middle" '
             f'font-size="14" font-family="sans-serif">{title}</text>']
    for tx in _ticks(x_lo, x_hi):
        x = float(px(tx))
        parts.append(f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" '
                     f'y2="{_H - _MB}" stroke="#eeeeee"/>')
        parts.append(f'<text x="{x:.1f}" y="{_H - _MB + 18}" '
                     f'text-anchor="middle" font-size="11" '
                     f'font-family="sans-serif">{tx:g}</text>')
    for ty in _ticks(y_lo, y_hi):
        y = float(py(ty))
        parts.append(f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W - _MR}" '
                     f'y2="{y:.1f}" stroke="#eeeeee"/>')
        parts.append(f'<text x="{_ML - 8}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{ty:g}</text>')
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
                 f'height="{_H - _MT - _MB}" fill="none" stroke="#333333"/>')
    parts.append(f'<text x="{_W/2:.0f}" y="{_H - 12}" text-anchor="middle" '
                 f'font-size="12" font-family="sans-serif">{xlabel}</text>')
    parts.append(f'<text x="16" y="{_H/2:.0f}" text-anchor="middle" '
                 f'font-size="12" font-family="sans-serif" '
                 f'transform="rotate(-90 16 {_H/2:.0f})">{ylabel}</text>')

    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        x = px(s["x"])
        y = py(s["y"])
        if s.get("band") is not None:
            blo = py(s["band"][0])
            bhi = py(s["band"][1])
            pts = [f"{xx:.1f},{yy:.1f}" for xx, yy in zip(x, bhi)]
            pts += [f"{xx:.1f},{yy:.1f}" for xx, yy in zip(x[::-1], blo[::-1])]
            parts.append(f'<polygon points="{" ".join(pts)}" fill="{color}" '
                         f'opacity="0.15"/>')
        pts = " ".join(f"{xx:.1f},{yy:.1f}" for xx, yy in zip(x, y))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        ly = _MT + 16 + 16 * i
        parts.append(f'<line x1="{_W - _MR - 150}" y1="{ly}" '
                     f'x2="{_W - _MR - 120}" y2="{ly}" stroke="{color}" '
                     f'stroke-width="2"/>')
        parts.append(f'<text x="{_W - _MR - 114}" y="{ly + 4}" font-size="11" '
                     f'font-family="sans-serif">{s["label"]}</text>')
    parts.append("</svg>")
    return "\n".join(parts)
