import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from metricmorph.errors import DegenerateDrawingError, MetricUndefinedError, StateMismatchError
from metricmorph.graph import Drawing, Graph, shortest_paths
from metricmorph.metrics import (METRIC_ORDER, MetricId, angular_resolution, combo_label,
                                 crossing_number, edge_length_deviation, evaluate, evaluate_all,
                                 incremental_update, make_state, parse_metric_ids, stress)

from conftest import random_connected_graph
from oracles import brute_crossings, naive_stress


def drawing(n, edges, X):
    return Drawing(Graph(n, edges), np.asarray(X, dtype=float))


def similarity_transform(X, angle, scale, shift):
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return X @ R.T * scale + shift


X_CROSS = [[0, 0], [1, 1], [0, 1], [1, 0]]


class TestStress:
    def test_k3_fixture(self, k3):
        d, D = k3
        assert stress(d, D) == pytest.approx(0.028595, abs=1e-5)

    def test_k3_by_hand(self, k3):
        d, D = k3
        alpha = (2 + math.sqrt(2)) / 4
        terms = [(alpha - 1) ** 2, (alpha - 1) ** 2, (alpha * math.sqrt(2) - 1) ** 2]
        assert stress(d, D) == pytest.approx(sum(terms) / 3, abs=1e-15)

    def test_single_edge_zero(self):
        d = drawing(2, [(0, 1)], [[0.2, 0.3], [0.9, 0.1]])
        assert stress(d, shortest_paths(d.graph)) == pytest.approx(0, abs=1e-15)

    def test_collinear_path_zero(self):
        d = drawing(3, [(0, 1), (1, 2)], [[0, 0], [0.5, 0], [1, 0]])
        assert stress(d, shortest_paths(d.graph)) == pytest.approx(0, abs=1e-15)

    def test_geodesic_star_zero(self):
        d = drawing(3, [(0, 1), (0, 2)], [[0.5, 0.5], [0, 0.5], [1, 0.5]])
        assert stress(d, shortest_paths(d.graph)) == pytest.approx(0, abs=1e-15)

    def test_coincident_pair_contributes_one(self):
        # nodes 0 and 2 coincide; their term is (0 - d)^2 / d^2 = 1 whatever alpha is
        d = drawing(3, [(0, 1), (1, 2)], [[0, 0], [1, 0], [0, 0]])
        D = shortest_paths(d.graph)
        assert stress(d, D) == pytest.approx(naive_stress(d.coords, D), abs=1e-12)
        assert stress(d, D) >= 1 / 3

    def test_all_coincident_raises(self):
        d = drawing(3, [(0, 1), (1, 2)], np.zeros((3, 2)))
        with pytest.raises(DegenerateDrawingError):
            stress(d, shortest_paths(d.graph))

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 25))
            g = random_connected_graph(n, int(rng.integers(0, n)), rng)
            X = rng.random((n, 2))
            D = shortest_paths(g)
            assert abs(stress(Drawing(g, X), D) - naive_stress(X, D)) <= 1e-9


class TestEdgeLengthDeviation:
    def test_equal_lengths(self):
        d = drawing(3, [(0, 1), (1, 2)], [[0, 0], [1, 0], [1, 1]])
        assert edge_length_deviation(d) == pytest.approx(0, abs=1e-15)

    def test_two_lengths(self):
        d = drawing(4, [(0, 1), (2, 3)], [[0, 0], [0.2, 0], [0, 1], [0.4, 1]])
        assert edge_length_deviation(d) == pytest.approx(0.1, abs=1e-12)

    def test_scaling_doubles(self, rng):
        g = random_connected_graph(10, 5, rng)
        X = rng.random((10, 2))
        a = edge_length_deviation(Drawing(g, X))
        assert edge_length_deviation(Drawing(g, 2 * X)) == pytest.approx(2 * a, rel=1e-12)


class TestCrossingNumber:
    def test_x(self):
        assert crossing_number(drawing(4, [(0, 1), (2, 3)], X_CROSS)) == 1

    def test_star_never_crosses(self, rng):
        d = drawing(4, [(0, 1), (0, 2), (0, 3)], rng.random((4, 2)))
        assert crossing_number(d) == 0

    def test_k4_convex(self):
        edges = [(a, b) for a in range(4) for b in range(a + 1, 4)]
        d = drawing(4, edges, [[0, 0], [1, 0], [1, 1], [0, 1]])
        assert crossing_number(d) == 1

    def test_touching_counts(self):
        # endpoint of one edge lies in the interior of the other
        d = drawing(4, [(0, 1), (2, 3)], [[0, 0], [1, 0], [0.5, 0], [0.5, 1]])
        assert crossing_number(d) == 1

    def test_collinear_overlap_counts_once(self):
        d = drawing(4, [(0, 1), (2, 3)], [[0, 0], [0.6, 0], [0.4, 0], [1, 0]])
        assert crossing_number(d) == 1

    def test_collinear_disjoint(self):
        d = drawing(4, [(0, 1), (2, 3)], [[0, 0], [0.3, 0], [0.4, 0], [1, 0]])
        assert crossing_number(d) == 0

    def test_zero_length_segment(self):
        d = drawing(4, [(0, 1), (2, 3)], [[0.5, 0.5], [0.5, 0.5], [0, 0], [1, 1]])
        assert crossing_number(d) == 0

    def test_shared_endpoint_exempt_even_if_overlapping(self):
        d = drawing(3, [(0, 1), (0, 2)], [[0, 0], [1, 0], [0.5, 0]])
        assert crossing_number(d) == 0

    def test_matches_exact_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(4, 21))
            g = random_connected_graph(n, int(rng.integers(0, 2 * n)), rng)
            X = rng.random((n, 2))
            if rng.random() < 0.3:  # snap to a coarse lattice to force degenerate cases
                X = np.round(X * 4) / 4
            assert crossing_number(Drawing(g, X)) == brute_crossings(X, g.edges.tolist())


class TestAngularResolution:
    def test_even_degree_four(self):
        d = drawing(5, [(0, i) for i in range(1, 5)], [[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]])
        assert angular_resolution(d) == pytest.approx(0, abs=1e-15)

    def test_straight_degree_two(self):
        d = drawing(3, [(0, 1), (0, 2)], [[0, 0], [1, 0], [-1, 0]])
        assert angular_resolution(d) == pytest.approx(0, abs=1e-15)

    def test_right_angle_degree_two(self):
        d = drawing(3, [(0, 1), (0, 2)], [[0, 0], [1, 0], [0, 1]])
        assert angular_resolution(d) == pytest.approx(0.5, abs=1e-15)

    def test_undefined_without_degree_two(self):
        d = drawing(2, [(0, 1)], [[0, 0], [1, 0]])
        with pytest.raises(MetricUndefinedError):
            angular_resolution(d)

    def test_zero_length_incident_edge(self):
        d = drawing(3, [(0, 1), (0, 2)], [[0, 0], [0, 0], [1, 1]])
        with pytest.raises(DegenerateDrawingError):
            angular_resolution(d)

    def test_averages_over_degree_two_nodes_only(self):
        # path 0-1-2-3: nodes 1 and 2 have degree 2; node 1 right angle, node 2 straight
        d = drawing(4, [(0, 1), (1, 2), (2, 3)], [[0, 1], [0, 0], [1, 0], [2, 0]])
        assert angular_resolution(d) == pytest.approx(0.25, abs=1e-15)


class TestInvariance:
    @given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi), st.floats(0.05, 20),
           st.floats(-5, 5), st.floats(-5, 5))
    def test_similarity_transforms(self, seed, angle, scale, dx, dy):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(12, 10, rng)
        X = rng.random((12, 2))
        Y = similarity_transform(X, angle, scale, np.array([dx, dy]))
        a, b = Drawing(g, X), Drawing(g, Y)
        D = shortest_paths(g)
        assert stress(b, D) == pytest.approx(stress(a, D), abs=1e-9)
        assert angular_resolution(b) == pytest.approx(angular_resolution(a), abs=1e-9)
        assert crossing_number(b) == crossing_number(a)
        assert edge_length_deviation(b) == pytest.approx(scale * edge_length_deviation(a), rel=1e-9, abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_bounds(self, seed):
        rng = np.random.default_rng(seed)
        g = random_connected_graph(15, 12, rng)
        d = Drawing(g, rng.random((15, 2)))
        assert stress(d, shortest_paths(g)) >= 0
        assert 0 <= angular_resolution(d) <= 1
        lengths = np.linalg.norm(d.coords[g.edges[:, 0]] - d.coords[g.edges[:, 1]], axis=1)
        assert 0 <= edge_length_deviation(d) <= lengths.max()


class TestEvaluate:
    def test_single(self):
        d = drawing(3, [(0, 1), (1, 2)], [[0, 0], [1, 0], [1, 1]])
        assert evaluate([MetricId.ELD], d, shortest_paths(d.graph)) == [pytest.approx(0, abs=1e-15)]

    def test_pair_order_as_given(self):
        d = drawing(4, [(0, 1), (2, 3)], X_CROSS)
        D = np.array([[0, 1, 2, 2], [1, 0, 2, 2], [2, 2, 0, 1], [2, 2, 1, 0]])
        assert evaluate(["CN", "ELD"], d, D) == [1, pytest.approx(0, abs=1e-15)]

    def test_ar_first_when_asked_first(self):
        d = drawing(3, [(0, 1), (0, 2)], [[0, 0], [1, 0], [0, 1]])
        D = shortest_paths(d.graph)
        ar, st_ = evaluate("AR-ST", d, D)
        assert ar == angular_resolution(d) and st_ == stress(d, D)

    def test_evaluate_all_keys(self, k3):
        d, D = k3
        assert list(evaluate_all(d, D)) == ["ST", "ELD", "CN", "AR"]

    def test_parse_and_label(self):
        assert parse_metric_ids("st,cn") == (MetricId.ST, MetricId.CN)
        assert combo_label(["AR", "ST"]) == "ST-AR"
        with pytest.raises(ValueError):
            parse_metric_ids("XX")


class TestIncremental:
    def _graph(self, rng, n=50):
        return random_connected_graph(n, n, rng)

    def test_empty_move_is_noop(self, rng):
        g = self._graph(rng)
        d = Drawing(g, rng.random((g.n, 2)))
        D = shortest_paths(g)
        for m in METRIC_ORDER:
            s = make_state(m, d, D)
            s2 = incremental_update(s, d, [], D)
            assert s2.value == s.value

    def test_star_leaf_move(self):
        g = Graph(4, [(0, 1), (0, 2), (0, 3)])
        d = Drawing(g, np.array([[0.5, 0.5], [0, 0], [1, 0], [0.5, 1]]))
        s = make_state("CN", d, None)
        X = d.coords.copy()
        X[1] = [1, 1]
        s2 = incremental_update(s, d.with_coords(X), [1])
        assert s2.value == 0 == crossing_number(d.with_coords(X))

    def test_unmoved_change_detected(self, rng):
        g = self._graph(rng, 10)
        d = Drawing(g, rng.random((10, 2)))
        s = make_state("ELD", d)
        X = d.coords.copy()
        X[3] += 0.1
        with pytest.raises(StateMismatchError):
            incremental_update(s, d.with_coords(X), [2])

    def test_original_state_untouched(self, rng):
        g = self._graph(rng, 20)
        d = Drawing(g, rng.random((20, 2)))
        D = shortest_paths(g)
        s = make_state("ST", d, D)
        before = s.value
        X = d.coords.copy()
        X[0] = [0.9, 0.9]
        incremental_update(s, d.with_coords(X), [0], D)
        assert s.value == before

    @pytest.mark.parametrize("metric", METRIC_ORDER)
    def test_thousand_single_moves(self, metric, rng):
        g = self._graph(rng)
        D = shortest_paths(g)
        X = rng.random((g.n, 2))
        state = make_state(metric, Drawing(g, X), D)
        for _ in range(1000):
            v = int(rng.integers(g.n))
            X = X.copy()
            X[v] = rng.random(2)
            d = Drawing(g, X)
            state = incremental_update(state, d, [v], D)
            assert abs(state.value - evaluate([metric], d, D)[0]) <= 1e-9

    @pytest.mark.parametrize("metric", METRIC_ORDER)
    def test_trial_commit_subsets(self, metric, rng):
        """The annealer's path: trial several nodes, commit only some proposals."""
        g = self._graph(rng, 40)
        D = shortest_paths(g)
        X = rng.random((g.n, 2))
        state = make_state(metric, Drawing(g, X), D)
        for step in range(300):
            moved = np.sort(rng.choice(g.n, int(rng.integers(1, 4)), replace=False))
            P = X.copy()
            P[moved] = np.clip(P[moved] + rng.normal(0, 0.05, (len(moved), 2)), 0, 1)
            value, pending = state.trial(P, moved)
            assert abs(value - evaluate([metric], Drawing(g, P), D)[0]) <= 1e-9
            if step % 2 == 0:
                state.commit(P, moved, pending)
                X = P
            assert abs(state.value - evaluate([metric], Drawing(g, X), D)[0]) <= 1e-9
