"""Target point sets: built-in shapes for any point count, or loaded from CSV."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SizeMismatchError
from .graph import normalize_coords, read_points, write_points

LABELS = ("X", "VERT", "HOR", "O", "DINO", "GRID")
LINE_POSITIONS = (0.1, 0.5, 0.9)

# Closed outline of a standing dinosaur facing left (head top-left, tail
# right), traced from the Datasaurus scatter plot. Units are arbitrary.
DINO_OUTLINE = np.array([
    (22, 92), (26, 96), (31, 98), (37, 98), (42, 96), (46, 91), (48, 85),
    (50, 79), (53, 72), (57, 67), (63, 64), (70, 61), (77, 57), (83, 52),
    (88, 47), (93, 42), (98, 36), (92, 37), (86, 39), (80, 41), (75, 41),
    (72, 37), (71, 30), (70, 22), (69, 15), (72, 9), (74, 5), (66, 5),
    (62, 7), (61, 14), (60, 22), (57, 28), (51, 29), (47, 27), (46, 20),
    (45, 12), (48, 6), (49, 3), (40, 3), (38, 8), (38, 16), (38, 24),
    (38, 32), (37, 39), (34, 45), (29, 47), (25, 45), (27, 50), (32, 53),
    (36, 56), (38, 62), (37, 69), (36, 76), (33, 81), (28, 83), (24, 84),
    (21, 86), (20, 89),
], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class TargetShape:
    points: np.ndarray
    label: str

    def __len__(self):
        return len(self.points)


def _even(k: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, k) if k > 1 else np.full(k, 0.5)


def _round_robin(n: int, lines: int) -> list[int]:
    return [len(range(i, n, lines)) for i in range(lines)]


def _lines(n: int, positions, vertical: bool) -> np.ndarray:
    pts = np.empty((n, 2))
    counts = _round_robin(n, len(positions))
    along = [_even(c) for c in counts]
    seen = [0] * len(positions)
    for i in range(n):
        line = i % len(positions)
        t = along[line][seen[line]]
        seen[line] += 1
        pts[i] = (positions[line], t) if vertical else (t, positions[line])
    return pts


def _diagonals(n: int) -> np.ndarray:
    pts = np.empty((n, 2))
    counts = _round_robin(n, 2)
    along = [_even(c) for c in counts]
    for i in range(n):
        t = along[i % 2][i // 2]
        pts[i] = (t, t) if i % 2 == 0 else (t, 1.0 - t)
    return pts


def _circle(n: int) -> np.ndarray:
    a = 2.0 * math.pi * np.arange(n) / n
    return np.column_stack([0.5 + 0.5 * np.cos(a), 0.5 + 0.5 * np.sin(a)])


def _grid(n: int) -> np.ndarray:
    k = math.isqrt(n - 1) + 1  # ceil(sqrt(n))
    axis = _even(k)
    xs, ys = np.meshgrid(axis, axis)
    return np.column_stack([xs.ravel(), ys.ravel()])[:n]


def resample_closed(polyline: np.ndarray, n: int) -> np.ndarray:
    """``n`` points evenly spaced by arc length around a closed polyline."""
    ring = np.vstack([polyline, polyline[:1]])
    seg = np.sqrt((np.diff(ring, axis=0) ** 2).sum(axis=1))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.arange(n) * (cum[-1] / n)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[idx]) / seg[idx]
    return ring[idx] + (ring[idx + 1] - ring[idx]) * frac[:, None]


def generate(label: str, n: int, line_positions=LINE_POSITIONS) -> TargetShape:
    """Built-in target with exactly ``n`` points in [0, 1]^2.

    Deterministic for a given ``(label, n)``. VERT/HOR distribute points
    round-robin over the lines in ``line_positions``.
    """
    label = label.upper()
    if n < 4:
        raise ValueError(f"target shapes need at least 4 points, got {n}")
    if label == "O":
        pts = _circle(n)
    elif label == "X":
        pts = _diagonals(n)
    elif label == "VERT":
        pts = _lines(n, line_positions, vertical=True)
    elif label == "HOR":
        pts = _lines(n, line_positions, vertical=False)
    elif label == "GRID":
        pts = _grid(n)
    elif label == "DINO":
        pts = normalize_coords(resample_closed(DINO_OUTLINE, n))
    else:
        raise ValueError(f"unknown shape {label!r}; choose from {', '.join(LABELS)}")
    pts = np.clip(pts, 0.0, 1.0)
    pts.setflags(write=False)
    return TargetShape(pts, label)


def load_target(path, n: int | None = None) -> TargetShape:
    """Read an ``x,y`` CSV and normalize it into [0, 1]^2 (label ``CUSTOM``)."""
    pts = read_points(path)
    if n is not None and len(pts) != n:
        raise SizeMismatchError(f"{path}: target has {len(pts)} points but the graph has {n} nodes")
    pts = normalize_coords(pts)
    pts.setflags(write=False)
    return TargetShape(pts, "CUSTOM")


def resolve_target(spec: str, n: int) -> TargetShape:
    """A built-in label (case-insensitive) or a path to a CSV file."""
    if spec.upper() in LABELS:
        return generate(spec, n)
    return load_target(spec, n)


def emit(label: str, n: int, path) -> None:
    write_points(generate(label, n).points, path)
