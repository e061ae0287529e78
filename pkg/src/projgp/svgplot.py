"""Tiny SVG emitter for line and scatter diagnostics plots.

Deliberately dependency-free: experiment runners record numbers to CSV
first and then render these plots from the same arrays, so plotting can
never affect recorded results.
"""

from __future__ import annotations

import numpy as np

PALETTE = (
    "#c9a227",  # gold
    "#1f77b4",  # blue
    "#d62728",  # red
    "#2ca02c",  # green
    "#9467bd",  # purple
    "#8c564b",  # brown
)

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 62, 16, 28, 42


def _transform(values, log):
    values = np.asarray(values, dtype=float)
    if log:
        values = np.where(values > 0, values, np.nan)
        return np.log10(values)
    return values


def _ticks(lo, hi, log):
    if log:
        lo_d, hi_d = int(np.floor(lo)), int(np.ceil(hi))
        if hi_d - lo_d <= 8:
            positions = np.arange(lo_d, hi_d + 1, dtype=float)
        else:
            step = int(np.ceil((hi_d - lo_d) / 8))
            positions = np.arange(lo_d, hi_d + 1, step, dtype=float)
        return [(p, f"1e{int(p)}") for p in positions if lo <= p <= hi]
    positions = np.linspace(lo, hi, 5)
    return [(p, f"{p:.3g}") for p in positions]


def svg_plot(
    path,
    series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 640,
    height: int = 420,
) -> None:
    """Render line/scatter series to an SVG file.

    ``series`` is a list of dicts with keys ``x``, ``y``, optional
    ``label``, ``kind`` ("line" or "scatter") and ``color``.
    """
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    xs = [_transform(s["x"], logx) for s in series]
    ys = [_transform(s["y"], logy) for s in series]
    all_x = np.concatenate([v[np.isfinite(v)] for v in xs]) if xs else np.array([0.0])
    all_y = np.concatenate([v[np.isfinite(v)] for v in ys]) if ys else np.array([0.0])
    if all_x.size == 0:
        all_x = np.array([0.0, 1.0])
    if all_y.size == 0:
        all_y = np.array([0.0, 1.0])
    x_lo, x_hi = float(np.min(all_x)), float(np.max(all_x))
    y_lo, y_hi = float(np.min(all_y)), float(np.max(all_y))
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x_pad = 0.02 * (x_hi - x_lo)
    y_pad = 0.05 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(v):
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return _MARGIN_T + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.1f}" y="17" text-anchor="middle" font-size="13">{title}</text>'
        )
    for pos, label in _ticks(x_lo, x_hi, logx):
        px = sx(pos)
        parts.append(
            f'<line x1="{px:.1f}" y1="{_MARGIN_T}" x2="{px:.1f}" '
            f'y2="{_MARGIN_T + plot_h}" stroke="#ddd" stroke-width="0.6"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{_MARGIN_T + plot_h + 14}" text-anchor="middle">{label}</text>'
        )
    for pos, label in _ticks(y_lo, y_hi, logy):
        py = sy(pos)
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{py:.1f}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{py:.1f}" stroke="#ddd" stroke-width="0.6"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 5}" y="{py + 3:.1f}" text-anchor="end">{label}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{height - 8}" '
            f'text-anchor="middle">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="14" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {_MARGIN_T + plot_h / 2:.1f})">{ylabel}</text>'
        )

    for idx, (entry, tx, ty) in enumerate(zip(series, xs, ys)):
        color = entry.get("color", PALETTE[idx % len(PALETTE)])
        keep = np.isfinite(tx) & np.isfinite(ty)
        px = [sx(v) for v in tx[keep]]
        py = [sy(v) for v in ty[keep]]
        if entry.get("kind", "line") == "line":
            points = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px, py))
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.6"/>'
            )
        else:
            for a, b in zip(px, py):
                parts.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3" fill="{color}"/>')
        label = entry.get("label")
        if label:
            ly = _MARGIN_T + 14 + 14 * idx
            lx = _MARGIN_L + plot_w - 10
            parts.append(
                f'<text x="{lx}" y="{ly}" text-anchor="end" fill="{color}">{label}</text>'
            )

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
