"""Deterministic SVG output for drawings and significance matrices.

Drawings live in the unit square with y pointing up; SVG y points down, so
the y axis is flipped. Edges are emitted before nodes so dots sit on top.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .graph import Drawing

SIGNIFICANT_FILL = "#f2cf3a"
NOT_SIGNIFICANT_FILL = "#b4b4b4"
DIAGONAL_FILL = "#ffffff"


def _f(v: float) -> str:
    return f"{v:.3f}"


def drawing_svg(d: Drawing, size: int = 400, pad: float = 8.0, node_radius: float = 3.0,
                stroke_width: float = 1.0, title: str | None = None) -> str:
    """SVG text for a drawing; (0, 0) maps to the lower-left corner ``(pad, size - pad)``."""
    span = size - 2 * pad
    X = np.asarray(d.coords, dtype=float)
    px = pad + X[:, 0] * span
    py = size - pad - X[:, 1] * span
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<g stroke="#555555" stroke-width="{_f(stroke_width)}" stroke-opacity="0.7">')
    for i, j in d.graph.edges:
        out.append(f'<line x1="{_f(px[i])}" y1="{_f(py[i])}" x2="{_f(px[j])}" y2="{_f(py[j])}"/>')
    out.append("</g>")
    out.append('<g fill="#1f4e9c">')
    for x, y in zip(px, py):
        out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(node_radius)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(d: Drawing, path, size: int = 400, **kw) -> Path:
    """Write ``d`` as SVG, or as PNG when ``path`` ends in ``.png``."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        render_png(d, path, size=size)
    else:
        path.write_text(drawing_svg(d, size=size, **kw))
    return path


def render_png(d: Drawing, path, size: int = 400, dpi: int = 100) -> Path:
    """Rasterize via matplotlib (optional dependency)."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        from matplotlib.collections import LineCollection
    except ImportError as exc:
        raise RuntimeError("PNG output needs matplotlib; install the 'png' extra") from exc
    X = np.asarray(d.coords, dtype=float)
    fig = plt.figure(figsize=(size / dpi, size / dpi), dpi=dpi)
    ax = fig.add_axes([0.02, 0.02, 0.96, 0.96])
    segs = [(X[i], X[j]) for i, j in d.graph.edges]
    ax.add_collection(LineCollection(segs, colors="#555555", linewidths=0.8, alpha=0.7, zorder=1))
    ax.scatter(X[:, 0], X[:, 1], s=9, c="#1f4e9c", zorder=2)
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_aspect("equal")
    ax.axis("off")
    fig.savefig(path, dpi=dpi, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def matrix_svg(matrix, cell: int = 36, label_width: int = 110) -> str:
    """Heatmap of a significance matrix: rows are tested as "greater than" columns."""
    levels = matrix.levels
    k = len(levels)
    w = label_width + k * cell + 10
    h = label_width + k * cell + 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<g font-family="sans-serif" font-size="11">',
    ]
    for i, name in enumerate(levels):
        y = label_width + i * cell + cell / 2 + 4
        out.append(f'<text x="{label_width - 6}" y="{_f(y)}" text-anchor="end">{escape(name)}</text>')
        x = label_width + i * cell + cell / 2 + 4
        out.append(f'<text x="{_f(x)}" y="{label_width - 6}" text-anchor="start" '
                   f'transform="rotate(-90 {_f(x)} {label_width - 6})">{escape(name)}</text>')
    out.append("</g>")
    out.append('<g stroke="white" stroke-width="2">')
    for i in range(k):
        for j in range(k):
            if i == j:
                fill = DIAGONAL_FILL
            elif matrix.significant[i, j]:
                fill = SIGNIFICANT_FILL
            else:
                fill = NOT_SIGNIFICANT_FILL
            out.append(f'<rect x="{label_width + j * cell}" y="{label_width + i * cell}" '
                       f'width="{cell}" height="{cell}" fill="{fill}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_matrix(matrix, path) -> Path:
    path = Path(path)
    path.write_text(matrix_svg(matrix))
    return path
