import numpy as np
import pytest
from hypothesis import settings

from spacegnn import graphdata as gd

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def ring_graph(n=10, dim=3, seed=0, chords=3):
    """Small connected graph with both labels present and a few random chords."""
    rng = np.random.default_rng(seed)
    u = list(range(n))
    v = [(i + 1) % n for i in range(n)]
    for _ in range(chords):
        a, b = rng.choice(n, size=2, replace=False)
        u.append(int(a))
        v.append(int(b))
    X = rng.normal(0.0, 0.5, size=(n, dim))
    y = np.zeros(n, dtype=np.int64)
    y[rng.choice(n, size=max(2, n // 4), replace=False)] = 1
    return gd.from_edges(n, u, v, X, y)


@pytest.fixture
def small_graph():
    return ring_graph()


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
