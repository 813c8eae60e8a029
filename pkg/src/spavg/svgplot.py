"""Minimal deterministic SVG line plots (polylines, axes, ticks, legend)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, k=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / k
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return [float(v) for v in np.arange(start, hi + 1e-9 * step, step)]


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if abs(v) < 1e4 else f"{v:.3g}"


def line_plot(t, series: dict, title: str = "", xlabel: str = "t", ylabel: str = "",
              width: int = 640, height: int = 400) -> str:
    """Render ``series`` (label -> y values over ``t``) as an SVG document string."""
    t = np.asarray(t, dtype=float)
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    ymin = min(float(y.min()) for y in ys)
    ymax = max(float(y.max()) for y in ys)
    pad = 0.05 * (ymax - ymin or 1.0)
    ymin, ymax = ymin - pad, ymax + pad
    x0, x1, y0, y1 = 60, width - 20, height - 50, 40

    def px(v):
        return x0 + (v - t[0]) / (t[-1] - t[0]) * (x1 - x0)

    def py(v):
        return y0 - (v - ymin) / (ymax - ymin) * (y0 - y1)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for v in _ticks(t[0], t[-1]):
        out.append(f'<line x1="{px(v):.2f}" y1="{y0}" x2="{px(v):.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{px(v):.2f}" y="{y0 + 18}" text-anchor="middle" font-size="11">{_fmt(v)}</text>')
    for v in _ticks(ymin, ymax):
        out.append(f'<line x1="{x0 - 5}" y1="{py(v):.2f}" x2="{x0}" y2="{py(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{py(v) + 4:.2f}" text-anchor="end" font-size="11">{_fmt(v)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>')
    for k, (label, y) in enumerate(zip(series, ys)):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3" points="{pts}"/>')
        ly = y1 + 8 + 18 * k
        out.append(f'<line x1="{x1 - 150}" y1="{ly}" x2="{x1 - 125}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 - 118}" y="{ly + 4}" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
