"""Graphs, graph-theoretic distances, drawings and start layouts."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import DegenerateDrawingError, DisconnectedGraphError, GraphError, MorphInputError, SizeMismatchError


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted, simple graph on nodes ``0..n-1``.

    Edges are stored as an ``(m, 2)`` int array with ``i < j`` in each row, in
    the order they were given. Validation rejects self-loops, duplicate edges
    and out-of-range indices instead of silently dropping them.
    """

    n: int
    edges: np.ndarray
    name: str = field(default="graph", compare=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise GraphError(f"node count must be positive, got {n}")
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError(f"edge endpoint outside [0, {n})")
        loops = np.flatnonzero(e[:, 0] == e[:, 1])
        if loops.size:
            raise GraphError(f"self-loop at node {e[loops[0], 0]}")
        e = np.sort(e, axis=1)
        keys = e[:, 0] * n + e[:, 1]
        uniq, counts = np.unique(keys, return_counts=True)
        if (counts > 1).any():
            dup = uniq[counts > 1][0]
            raise GraphError(f"duplicate edge ({dup // n}, {dup % n})")
        e.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", e)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def degree(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)
        deg.setflags(write=False)
        return deg

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR neighbour lists ``(indptr, indices)``; neighbours sorted ascending."""
        return _csr(self.n, np.concatenate([self.edges, self.edges[:, ::-1]]))

    @cached_property
    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR incident-edge lists ``(indptr, edge_ids)``."""
        ids = np.arange(self.m, dtype=np.int64)
        pairs = np.concatenate([
            np.column_stack([self.edges[:, 0], ids]),
            np.column_stack([self.edges[:, 1], ids]),
        ])
        return _csr(self.n, pairs)

    def neighbors(self, v: int) -> np.ndarray:
        indptr, idx = self.adjacency
        return idx[indptr[v]:indptr[v + 1]]

    @classmethod
    def from_edges(cls, edges, n: int | None = None, name: str = "graph") -> "Graph":
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if n is None:
            n = int(e.max()) + 1 if e.size else 0
        return cls(n, e, name)


def _csr(n, pairs):
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs = pairs[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, pairs[:, 0] + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, np.ascontiguousarray(pairs[:, 1])


def shortest_paths(g: Graph) -> np.ndarray:
    """All-pairs hop counts (BFS per source). Raises on a disconnected graph."""
    if g.n == 1:
        return np.zeros((1, 1), dtype=np.int64)
    data = np.ones(2 * g.m)
    rows = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    cols = np.concatenate([g.edges[:, 1], g.edges[:, 0]])
    adj = csr_matrix((data, (rows, cols)), shape=(g.n, g.n))
    d = shortest_path(adj, method="D", directed=False, unweighted=True)
    bad = np.argwhere(~np.isfinite(d))
    if len(bad):
        i, j = sorted(bad[0])
        raise DisconnectedGraphError(int(i), int(j))
    d = d.astype(np.int64)
    d.setflags(write=False)
    return d


def is_connected(g: Graph) -> bool:
    try:
        shortest_paths(g)
    except DisconnectedGraphError:
        return False
    return True


def dual_barabasi_albert(n: int, m1: int = 1, m2: int = 2, p: float = 0.755,
                         seed: int = 0) -> Graph:
    """Dual Barabasi-Albert preferential attachment graph.

    Starts from a star on ``max(m1, m2) + 1`` nodes; every later node attaches
    ``m1`` edges with probability ``p`` and ``m2`` edges otherwise, choosing
    distinct targets proportionally to degree. Growth by attachment keeps the
    result connected; the connectivity check is kept as a guard and the
    generator retries with a derived seed if it ever fails.
    """
    if not (1 <= min(m1, m2) and max(m1, m2) < n):
        raise GraphError(f"need n > max(m1, m2) >= 1, got n={n}, m1={m1}, m2={m2}")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"p must be a probability, got {p}")
    for attempt in range(100):
        g = _dual_ba_once(n, m1, m2, p, np.random.default_rng([seed, attempt]))
        if is_connected(g):
            return g
    raise GraphError("dual Barabasi-Albert generation kept producing disconnected graphs")


def _dual_ba_once(n, m1, m2, p, rng):
    m0 = max(m1, m2)
    edges = [(0, v) for v in range(1, m0 + 1)]
    repeated = [0] * m0 + list(range(1, m0 + 1))
    for v in range(m0 + 1, n):
        k = m1 if rng.random() < p else m2
        targets: list[int] = []
        while len(targets) < k:
            t = repeated[int(rng.integers(len(repeated)))]
            if t not in targets:
                targets.append(t)
        for t in targets:
            edges.append((t, v))
        repeated.extend(targets)
        repeated.extend([v] * k)
    return Graph(n, np.array(edges), name=f"dual-ba-{n}")


def grid_graph(rows: int, cols: int | None = None) -> Graph:
    """``rows x cols`` lattice, nodes numbered row-major."""
    cols = rows if cols is None else cols
    idx = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
    vert = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
    return Graph(rows * cols, np.concatenate([horiz, vert]), name=f"grid-{rows}x{cols}")


@dataclass(frozen=True, eq=False)
class Drawing:
    """Straight-line drawing: one 2-D position per node of ``graph``."""

    graph: Graph
    coords: np.ndarray

    def __post_init__(self):
        X = np.array(self.coords, dtype=np.float64).reshape(-1, 2)
        if len(X) != self.graph.n:
            raise SizeMismatchError(f"{len(X)} coordinates for a graph with {self.graph.n} nodes")
        if not np.isfinite(X).all():
            raise DegenerateDrawingError("drawing has non-finite coordinates")
        X.setflags(write=False)
        object.__setattr__(self, "coords", X)

    def with_coords(self, coords) -> "Drawing":
        return Drawing(self.graph, coords)


def normalize_coords(X: np.ndarray) -> np.ndarray:
    """Uniformly scale and translate into [0, 1]^2.

    The longer bounding-box side maps onto [0, 1] and the shorter side is
    centred, so angles and crossings are untouched. Input that is already
    normalized is returned unchanged (bitwise).
    """
    X = np.asarray(X, dtype=np.float64)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = hi - lo
    extent = span.max()
    if not extent > 0:
        raise DegenerateDrawingError("cannot normalize a drawing whose nodes all coincide")
    if _is_normalized(lo, hi):
        return X.copy()
    out = (X - lo) / extent
    out += (1.0 - span / extent) / 2.0
    return np.clip(out, 0.0, 1.0)


def _is_normalized(lo, hi, tol=1e-12):
    if lo.min() < 0 or hi.max() > 1:
        return False
    long_axis = int(np.argmax(hi - lo))
    short_axis = 1 - long_axis
    return (lo[long_axis] == 0.0 and hi[long_axis] == 1.0
            and abs(lo[short_axis] + hi[short_axis] - 1.0) <= tol)


def normalize(d: Drawing) -> Drawing:
    return d.with_coords(normalize_coords(d.coords))


def random_layout(g: Graph, seed: int = 0) -> Drawing:
    X = np.random.default_rng(seed).random((g.n, 2))
    return normalize(Drawing(g, X))


def force_layout(g: Graph, iterations: int = 300, seed: int = 0) -> Drawing:
    """Fruchterman-Reingold spring embedder with linear cooling.

    A stand-in for the external layout tools normally used to produce start
    drawings; importing coordinates from CSV is the primary route.
    """
    shortest_paths(g)  # connectivity precondition
    rng = np.random.default_rng(seed)
    n = g.n
    X = rng.random((n, 2))
    if n == 1:
        return Drawing(g, np.full((1, 2), 0.5))
    k = np.sqrt(1.0 / n)
    u, v = g.edges[:, 0], g.edges[:, 1]
    t0 = 0.1
    for it in range(iterations):
        delta = X[:, None, :] - X[None, :, :]
        dist = np.sqrt((delta ** 2).sum(axis=-1))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, 1e-9)
        disp = (delta * (k * k / dist ** 2)[:, :, None]).sum(axis=1)
        ed = X[u] - X[v]
        el = np.maximum(np.sqrt((ed ** 2).sum(axis=1)), 1e-9)
        pull = ed * (el / k)[:, None]
        np.add.at(disp, u, -pull)
        np.add.at(disp, v, pull)
        length = np.maximum(np.sqrt((disp ** 2).sum(axis=1)), 1e-9)
        t = t0 * (1.0 - it / iterations)
        X = X + disp * (np.minimum(length, t) / length)[:, None]
    return normalize(Drawing(g, X))


# -- file formats -----------------------------------------------------------

def read_edgelist(path, n: int | None = None) -> Graph:
    """Plain text, one ``i j`` pair per line, 0-based; ``#`` starts a comment."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected 'i j', got {line!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise GraphError(f"{path}:{lineno}: non-integer node index in {line!r}") from None
    return Graph.from_edges(edges, n=n, name=Path(path).stem)


def write_edgelist(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {g.name}: n={g.n} m={g.m}\n")
        for i, j in g.edges:
            fh.write(f"{i} {j}\n")


def read_points(path) -> np.ndarray:
    """CSV with header ``x,y``; row k is point k."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader, [])]
        if header[:2] != ["x", "y"]:
            raise MorphInputError(f"{path}: expected header 'x,y', got {header}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r and r[0].strip()]
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def write_points(X, path) -> None:
    # repr round-trips float64 exactly
    with open(path, "w", newline="") as fh:
        fh.write("x,y\n")
        for x, y in np.asarray(X, dtype=np.float64):
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def read_drawing(g: Graph, path) -> Drawing:
    return Drawing(g, read_points(path))
