"""Deterministic standalone SVG scatter plots for 2-D embeddings.

No rendering dependency: the file is assembled as text with fixed float
formatting, so identical inputs produce byte-identical files (goldens
diff cleanly).
"""

from __future__ import annotations

import numpy as np

from .errors import UnsupportedDimensionError

# 20 fill colors, tab20 ordering
PALETTE = (
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c",
    "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f",
    "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
)

WIDTH, HEIGHT = 640, 480
PAD = 40.0
POINT_RADIUS = 3.0


def _axis_range(v: np.ndarray):
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    if span <= 0.0:
        lo -= 1.0
        hi += 1.0
        span = 2.0
    return lo - 0.05 * span, hi + 0.05 * span


def scatter_svg(Y, labels=None) -> str:
    """SVG 1.1 document: one circle per row of Y, fill keyed by label,
    axes auto-scaled with a 5% margin, legend when labels are present."""
    P = np.asarray(Y, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 2:
        raise UnsupportedDimensionError(
            f"scatter plots need a 2-D embedding, got shape {P.shape}")
    lab = None if labels is None else np.asarray(labels, dtype=np.int64)

    x_lo, x_hi = _axis_range(P[:, 0])
    y_lo, y_hi = _axis_range(P[:, 1])
    plot_w = WIDTH - 2 * PAD
    plot_h = HEIGHT - 2 * PAD

    def px(x):
        return PAD + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return PAD + (y_hi - y) / (y_hi - y_lo) * plot_h  # y grows upward

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<rect x="{PAD:.1f}" y="{PAD:.1f}" width="{plot_w:.1f}" '
        f'height="{plot_h:.1f}" fill="none" stroke="#cccccc" stroke-width="1"/>',
    ]
    for r in range(P.shape[0]):
        color = PALETTE[0] if lab is None else PALETTE[int(lab[r]) % len(PALETTE)]
        out.append(
            f'<circle cx="{px(P[r, 0]):.2f}" cy="{py(P[r, 1]):.2f}" '
            f'r="{POINT_RADIUS:.1f}" fill="{color}" fill-opacity="0.85"/>')
    if lab is not None:
        for t, value in enumerate(sorted(set(int(v) for v in lab))):
            ly = PAD + 14.0 * t
            color = PALETTE[value % len(PALETTE)]
            out.append(
                f'<rect x="{WIDTH - PAD + 6:.1f}" y="{ly:.1f}" width="10" '
                f'height="10" fill="{color}"/>')
            out.append(
                f'<text x="{WIDTH - PAD + 20:.1f}" y="{ly + 9:.1f}" '
                f'font-family="sans-serif" font-size="11">{value}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_scatter_svg(path, Y, labels=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scatter_svg(Y, labels))
