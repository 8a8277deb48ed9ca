import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dagplace.graph import CommModel, ComputationGraph, OpNode, TensorEdge

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# one byte costs one microsecond and there is no latency, so bytes == time
UNIT = CommModel(1.0, 0.0)

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def make_graph(weights, edges=(), memory=None, groups=None):
    """Nodes 0..n-1 with the given compute times; ``edges`` are (src, dst, bytes)."""
    memory = memory or [1] * len(weights)
    groups = groups or {}
    nodes = [OpNode(i, f"n{i}", w, m, groups.get(i)) for i, (w, m) in enumerate(zip(weights, memory))]
    return ComputationGraph(nodes, [TensorEdge(s, d, b) for s, d, b in edges])


@st.composite
def dags(draw, min_nodes=1, max_nodes=12, max_w=50, max_bytes=60, max_mem=20):
    """Random DAGs: edges only run from a lower to a higher rank of a random permutation."""
    n = draw(st.integers(min_nodes, max_nodes))
    perm = draw(st.permutations(list(range(n))))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=min(len(pairs), 3 * n))) if pairs else []
    weights = draw(st.lists(st.integers(1, max_w), min_size=n, max_size=n))
    memory = draw(st.lists(st.integers(1, max_mem), min_size=n, max_size=n))
    edges = [(perm[i], perm[j], draw(st.integers(0, max_bytes))) for i, j in chosen]
    return make_graph(weights, edges, memory)


@pytest.fixture
def record_acceptance():
    def record(name: str, passed: bool, detail: str = ""):
        ACCEPTANCE_RESULTS.append((name, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
