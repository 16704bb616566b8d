"""Drawing quality metrics (lower is better) and incremental evaluators.

Four metrics are supported: stress (ST), edge length deviation (ELD),
crossing number (CN) and angular resolution deviation (AR). Each has a pure
full evaluator and a :class:`MetricState` that re-evaluates a drawing after a
subset of nodes moved, touching only the affected pairs/edges/nodes.
"""

from __future__ import annotations

import copy
import enum
from typing import Iterable

import numpy as np

from . import _kernels as K
from .errors import DegenerateDrawingError, MetricUndefinedError, SizeMismatchError, StateMismatchError
from .graph import Drawing, Graph


class MetricId(str, enum.Enum):
    ST = "ST"
    ELD = "ELD"
    CN = "CN"
    AR = "AR"

    def __str__(self):
        return self.value


METRIC_ORDER = (MetricId.ST, MetricId.ELD, MetricId.CN, MetricId.AR)


def parse_metric_ids(ids) -> tuple[MetricId, ...]:
    """Accept ``"ST-CN"``, ``"ST,CN"``, ``["ST", "CN"]`` or MetricIds; order and
    first occurrence are preserved."""
    if isinstance(ids, (str, MetricId)):
        ids = str(ids).replace(",", "-").replace("+", "-").split("-")
    out: list[MetricId] = []
    for i in ids:
        mid = i if isinstance(i, MetricId) else MetricId(str(i).strip().upper())
        if mid not in out:
            out.append(mid)
    if not out:
        raise ValueError("no metric ids given")
    return tuple(out)


def combo_label(ids) -> str:
    """Canonical label, members in ST-ELD-CN-AR order (e.g. ``ST-CN``)."""
    ids = set(parse_metric_ids(ids))
    return "-".join(m.value for m in METRIC_ORDER if m in ids)


# -- full evaluators ----------------------------------------------------------

def _coords(d):
    return d.coords if isinstance(d, Drawing) else np.asarray(d, dtype=np.float64)


def _pair_distances(X):
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2)


def stress(d: Drawing, dist: np.ndarray) -> float:
    """Normalized stress after optimally rescaling the drawing.

    The drawing is scaled by the single factor that minimises the weighted
    residual against graph distances, then the mean over unordered pairs of
    ``(|Z_i - Z_j| - d_ij)^2 / d_ij^2`` is returned.
    """
    X = _coords(d)
    n = len(X)
    if dist.shape != (n, n):
        raise SizeMismatchError(f"distance matrix {dist.shape} does not match {n} nodes")
    if n < 2:
        raise MetricUndefinedError("stress needs at least two nodes")
    iu = np.triu_indices(n, 1)
    e = _pair_distances(X)[iu]
    dd = dist[iu].astype(np.float64)
    s2 = np.sum(e * e / (dd * dd))
    if s2 == 0.0:
        raise DegenerateDrawingError("stress scale undefined: all nodes coincide")
    alpha = np.sum(e / dd) / s2
    r = alpha * e - dd
    return float(np.mean(r * r / (dd * dd)))


def edge_lengths(d, g: Graph) -> np.ndarray:
    X = np.ascontiguousarray(_coords(d))
    L = np.empty(g.m)
    K.update_lengths(X, g.edges, np.arange(g.m, dtype=np.int64), L)
    return L


def _eld_from_lengths(L):
    return float(K.eld_value(L))


def edge_length_deviation(d: Drawing) -> float:
    """Population standard deviation of edge lengths."""
    g = d.graph
    if g.m < 1:
        raise MetricUndefinedError("edge length deviation needs at least one edge")
    return _eld_from_lengths(edge_lengths(d, g))


def crossing_number(d: Drawing) -> int:
    """Number of unordered edge pairs whose segments intersect.

    Pairs sharing a graph endpoint never count. Touching and collinear
    overlap count as one crossing; zero-length segments cross nothing.
    """
    g = d.graph
    if g.m < 2:
        return 0
    return int(K.crossing_count(d.coords, g.edges))


def _ar_contributions(X, g: Graph, nodes=None):
    out = np.zeros(g.n)
    indptr, nbrs = g.adjacency
    if nodes is None:
        nodes = np.arange(g.n, dtype=np.int64)
    bad = K.angle_deviation(X, indptr, nbrs, nodes, out)
    if bad >= 0:
        raise DegenerateDrawingError(f"zero-length edge at node {bad}: angle undefined")
    return out


def _ar_count(g: Graph) -> int:
    n_prime = int(np.count_nonzero(g.degree >= 2))
    if n_prime == 0:
        raise MetricUndefinedError("angular resolution needs a node of degree >= 2")
    return n_prime


def angular_resolution(d: Drawing) -> float:
    """Mean relative shortfall of each node's smallest angle vs 2*pi/deg.

    Averaged over nodes of degree >= 2; the result lies in [0, 1].
    """
    g = d.graph
    n_prime = _ar_count(g)
    return float(np.sum(_ar_contributions(d.coords, g)) / n_prime)


def evaluate(ids, d: Drawing, dist: np.ndarray) -> list[float]:
    """Evaluate the requested metrics; values come back in the order given."""
    out = []
    for mid in parse_metric_ids(ids):
        if mid is MetricId.ST:
            out.append(stress(d, dist))
        elif mid is MetricId.ELD:
            out.append(edge_length_deviation(d))
        elif mid is MetricId.CN:
            out.append(float(crossing_number(d)))
        else:
            out.append(angular_resolution(d))
    return out


def evaluate_all(d: Drawing, dist: np.ndarray) -> dict[str, float]:
    return {m.value: v for m, v in zip(METRIC_ORDER, evaluate(METRIC_ORDER, d, dist))}


# -- incremental evaluation ---------------------------------------------------

def _incident_edges(g: Graph, moved: np.ndarray, scratch=None) -> np.ndarray:
    indptr, eids = g.incidence
    if scratch is None:
        scratch = np.zeros(g.m, dtype=np.bool_)
    return K.touched_edges(indptr, eids, moved, scratch)


class MetricState:
    """Running value of one metric for a drawing that changes a few nodes at a time.

    ``trial`` prices a move without changing the state and returns an opaque
    pending update; ``commit`` applies it. ``coords`` always reflect the last
    committed drawing.
    """

    metric: MetricId

    def __init__(self, graph: Graph, coords: np.ndarray, dist: np.ndarray | None = None):
        self.graph = graph
        self.dist = dist
        self.coords = np.array(coords, dtype=np.float64)
        self.value = 0.0
        self._build()

    def _build(self):
        raise NotImplementedError

    def full_value(self, coords=None) -> float:
        X = self.coords if coords is None else coords
        return evaluate([self.metric], Drawing(self.graph, X), self.dist)[0]

    def trial(self, coords: np.ndarray, moved) -> tuple[float, object]:
        raise NotImplementedError

    def commit(self, coords: np.ndarray, moved, pending) -> None:
        raise NotImplementedError

    def resync(self) -> None:
        """Rebuild caches from scratch for the committed coordinates."""
        self._build()

    _shared = ("dist", "w1", "w2")

    def copy(self) -> "MetricState":
        new = copy.copy(self)
        for k, v in vars(self).items():
            if isinstance(v, np.ndarray) and k not in self._shared:
                setattr(new, k, v.copy())
        return new


class StressState(MetricState):
    """Keeps the pair-distance matrix and the two weighted sums that fix the
    optimal scale; stress is then ``1 - S1^2 / (S2 * pairs)``."""

    metric = MetricId.ST
    resync_every = 500

    def _build(self):
        n = self.graph.n
        if self.dist is None:
            raise ValueError("stress state needs the distance matrix")
        if n < 2:
            raise MetricUndefinedError("stress needs at least two nodes")
        d = self.dist.astype(np.float64)
        with np.errstate(divide="ignore"):
            w1 = np.where(d > 0, 1.0 / d, 0.0)
        self.w1 = w1
        self.w2 = w1 * w1
        self.pairs = n * (n - 1) / 2
        self.E = _pair_distances(self.coords)
        self.s1 = float(np.sum(self.E * self.w1)) / 2
        self.s2 = float(np.sum(self.E * self.E * self.w2)) / 2
        self._commits = 0
        self.value = self._value(self.s1, self.s2)

    def _value(self, s1, s2):
        if s2 <= 0.0:
            raise DegenerateDrawingError("stress scale undefined: all nodes coincide")
        return max(0.0, 1.0 - s1 * s1 / (s2 * self.pairs))

    def _touching(self, rows, moved):
        # sum over pairs with at least one endpoint in `moved`
        w1, w2 = self.w1[moved], self.w2[moved]
        block = rows[:, moved]
        a = np.sum(rows * w1) - 0.5 * np.sum(block * w1[:, moved])
        b = np.sum(rows * rows * w2) - 0.5 * np.sum(block * block * w2[:, moved])
        return a, b

    def trial(self, coords, moved):
        moved = np.asarray(moved, dtype=np.int64)
        if moved.size == 0:
            return self.value, None
        diff = coords[moved][:, None, :] - coords[None, :, :]
        rows = np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2)
        old1, old2 = self._touching(self.E[moved], moved)
        new1, new2 = self._touching(rows, moved)
        s1 = self.s1 - old1 + new1
        s2 = self.s2 - old2 + new2
        return self._value(s1, s2), (rows, s1, s2)

    def commit(self, coords, moved, pending):
        if pending is None:
            return
        moved = np.asarray(moved, dtype=np.int64)
        rows, s1, s2 = pending
        self.E[moved, :] = rows
        self.E[:, moved] = rows.T
        self.coords[moved] = coords[moved]
        self.s1, self.s2 = s1, s2
        self._commits += 1
        if self._commits % self.resync_every == 0:
            self.s1 = float(np.sum(self.E * self.w1)) / 2
            self.s2 = float(np.sum(self.E * self.E * self.w2)) / 2
        self.value = self._value(self.s1, self.s2)


class EdgeLengthState(MetricState):
    metric = MetricId.ELD

    def _build(self):
        if self.graph.m < 1:
            raise MetricUndefinedError("edge length deviation needs at least one edge")
        self.lengths = edge_lengths(self.coords, self.graph)
        self.scratch = np.zeros(self.graph.m, dtype=np.bool_)
        self.value = _eld_from_lengths(self.lengths)

    def trial(self, coords, moved):
        moved = np.asarray(moved, dtype=np.int64)
        touched = _incident_edges(self.graph, moved, self.scratch)
        if touched.size == 0:
            return self.value, None
        L = self.lengths.copy()
        K.update_lengths(coords, self.graph.edges, touched, L)
        return _eld_from_lengths(L), L

    def commit(self, coords, moved, pending):
        moved = np.asarray(moved, dtype=np.int64)
        self.coords[moved] = coords[moved]
        if pending is None:
            return
        self.lengths = pending
        self.value = _eld_from_lengths(self.lengths)


class CrossingState(MetricState):
    """Edge-pair crossing flags plus the running total."""

    metric = MetricId.CN

    def _build(self):
        g = self.graph
        self.C = K.crossing_matrix(self.coords, g.edges)
        self.scratch = np.zeros(g.m, dtype=np.bool_)
        self.total = int(self.C.sum()) // 2
        self.value = float(self.total)

    def _touching(self, rows, touched):
        return int(rows.sum(dtype=np.int64)) - int(rows[:, touched].sum(dtype=np.int64)) // 2

    def trial(self, coords, moved):
        moved = np.asarray(moved, dtype=np.int64)
        touched = _incident_edges(self.graph, moved, self.scratch)
        if touched.size == 0:
            return self.value, None
        rows = K.crossing_rows(coords, self.graph.edges, touched)
        total = self.total - self._touching(self.C[touched], touched) + self._touching(rows, touched)
        return float(total), (touched, rows, total)

    def commit(self, coords, moved, pending):
        moved = np.asarray(moved, dtype=np.int64)
        self.coords[moved] = coords[moved]
        if pending is None:
            return
        touched, rows, total = pending
        self.C[touched, :] = rows
        self.C[:, touched] = rows.T
        self.total = total
        self.value = float(total)


class AngularState(MetricState):
    metric = MetricId.AR

    def _build(self):
        self.n_prime = _ar_count(self.graph)
        self.scratch = np.zeros(self.graph.n, dtype=np.bool_)
        self.contrib = _ar_contributions(self.coords, self.graph)
        self.value = float(np.sum(self.contrib) / self.n_prime)

    def _affected(self, moved):
        indptr, nbrs = self.graph.adjacency
        return K.closed_neighborhood(indptr, nbrs, moved, self.scratch)

    def trial(self, coords, moved):
        moved = np.asarray(moved, dtype=np.int64)
        if moved.size == 0:
            return self.value, None
        nodes = self._affected(moved)
        contrib = self.contrib.copy()
        indptr, nbrs = self.graph.adjacency
        bad = K.angle_deviation(coords, indptr, nbrs, nodes, contrib)
        if bad >= 0:
            raise DegenerateDrawingError(f"zero-length edge at node {bad}: angle undefined")
        return float(np.sum(contrib) / self.n_prime), contrib

    def commit(self, coords, moved, pending):
        moved = np.asarray(moved, dtype=np.int64)
        self.coords[moved] = coords[moved]
        if pending is None:
            return
        self.contrib = pending
        self.value = float(np.sum(self.contrib) / self.n_prime)


_STATE_TYPES = {
    MetricId.ST: StressState,
    MetricId.ELD: EdgeLengthState,
    MetricId.CN: CrossingState,
    MetricId.AR: AngularState,
}


def make_state(metric, d: Drawing, dist: np.ndarray | None = None) -> MetricState:
    metric = parse_metric_ids([metric])[0]
    return _STATE_TYPES[metric](d.graph, d.coords, dist)


def incremental_update(state: MetricState, d: Drawing, moved: Iterable[int],
                       dist: np.ndarray | None = None) -> MetricState:
    """Return a new state for drawing ``d``, where only ``moved`` nodes differ
    from the drawing ``state`` was built for."""
    if d.graph is not state.graph and d.graph.n != state.graph.n:
        raise StateMismatchError("state and drawing belong to different graphs")
    moved = np.asarray(sorted(set(int(v) for v in moved)), dtype=np.int64)
    X = d.coords
    if len(X) != len(state.coords):
        raise StateMismatchError("state and drawing have different node counts")
    still = np.ones(len(X), dtype=bool)
    still[moved] = False
    if not np.array_equal(X[still], state.coords[still]):
        raise StateMismatchError("nodes outside `moved` changed position")
    new = state.copy()
    if dist is not None:
        new.dist = dist
    if moved.size:
        _, pending = new.trial(X, moved)
        new.commit(X, moved, pending)
    return new


class FullState(MetricState):
    """Same interface as the incremental states but recomputes from scratch.

    Used to cross-check the incremental path inside the annealer.
    """

    def __init__(self, metric, graph, coords, dist=None):
        self.metric = parse_metric_ids([metric])[0]
        super().__init__(graph, coords, dist)

    def _build(self):
        self.value = self.full_value()

    def trial(self, coords, moved):
        v = self.full_value(coords)
        return v, v

    def commit(self, coords, moved, pending):
        moved = np.asarray(moved, dtype=np.int64)
        self.coords[moved] = coords[moved]
        self.value = self.full_value() if pending is None else pending
