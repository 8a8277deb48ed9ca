import pytest

from dagplace.errors import UnreachableTargetCCR
from dagplace.generators import DEFAULT_COMM, SyntheticSpec, devices_for, gen
from dagplace.graph import ccr, validate


def test_parallel_chains_shape():
    g = gen(SyntheticSpec(kind="parallel-chains", nodes=8, chains=2, seed=0))
    assert len(g) == 8 and g.sources() == [0, 4]
    assert sorted((e.src, e.dst) for e in g.edges) == [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)]


@pytest.mark.parametrize("kind", ["layered", "random-dag", "parallel-chains"])
def test_generated_graphs_are_valid_and_seeded(kind):
    spec = SyntheticSpec(kind=kind, nodes=300, seed=9)
    a, b = gen(spec), gen(spec)
    assert validate(a).ok and a == b
    assert gen(SyntheticSpec(kind=kind, nodes=300, seed=10)) != a


def test_layered_ccr_calibration():
    g = gen(SyntheticSpec(kind="layered", nodes=6332, seed=0, target_ccr=33.0))
    assert 26.4 <= ccr(g, DEFAULT_COMM) <= 39.6


def test_unreachable_ccr():
    with pytest.raises(UnreachableTargetCCR):
        gen(SyntheticSpec(kind="random-dag", nodes=200, seed=0, target_ccr=0.05))


def test_devices_for_load():
    g = gen(SyntheticSpec(nodes=100, seed=1))
    devs = devices_for(g, 4, load=0.5)
    assert len(devs) == 4
    assert g.total_memory <= 0.5 * sum(d.memory_capacity for d in devs) + 4


def test_bad_kind():
    with pytest.raises(ValueError):
        SyntheticSpec(kind="tree")
