"""Deterministic SVG scatter plots of 2-D clustered data, no image dependencies."""

import numpy as np

from .datagen import atomic_write_text

__all__ = ["render_svg", "save_svg"]

# Fixed palette; cluster id i cycles through it.
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
)

_SIZE = 640.0
_MARGIN = 20.0
_RADIUS = 3.0


def render_svg(points, labels) -> str:
    """SVG scatter of 2-D points, one fixed palette color per cluster.

    Output bytes are a pure function of the inputs. Raises ``ValueError``
    unless the data is 2-D.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("plot requires 2-D data")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != pts.shape[0]:
        raise ValueError("labels and points disagree on n")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = (_SIZE - 2 * _MARGIN) / span.max()
    offset = _MARGIN + 0.5 * ((_SIZE - 2 * _MARGIN) - scale * span)

    def sx(x):
        return offset[0] + scale * (x - lo[0])

    def sy(y):
        # SVG y grows downward
        return _SIZE - (offset[1] + scale * (y - lo[1]))

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE:.0f}" height="{_SIZE:.0f}" '
        f'viewBox="0 0 {_SIZE:.0f} {_SIZE:.0f}">',
        f'<rect width="{_SIZE:.0f}" height="{_SIZE:.0f}" fill="white"/>',
    ]
    for i in range(pts.shape[0]):
        color = PALETTE[int(labels[i]) % len(PALETTE)]
        lines.append(
            f'<circle cx="{sx(pts[i, 0]):.3f}" cy="{sy(pts[i, 1]):.3f}" '
            f'r="{_RADIUS:g}" fill="{color}" fill-opacity="0.8"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def save_svg(points, labels, path):
    atomic_write_text(path, render_svg(points, labels))
