import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from metricmorph.graph import Drawing, Graph, shortest_paths  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_connected_graph(n, extra, rng):
    """Random spanning tree plus ``extra`` random non-tree edges."""
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    tries = 0
    while n > 2 and len(edges) < n - 1 + extra and tries < 50 * (extra + 1):
        a, b = sorted(int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((a, b))
        tries += 1
    return Graph(n, sorted(edges))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def k3():
    g = Graph(3, [(0, 1), (1, 2), (0, 2)])
    return Drawing(g, np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])), shortest_paths(g)


# criterion number -> (passed, detail); filled by test_acceptance.report
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
