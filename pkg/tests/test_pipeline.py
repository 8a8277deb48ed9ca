import pytest

from dagplace.generators import DEFAULT_COMM, ProfileFamily, SyntheticSpec, devices_for, gen
from dagplace.graph import DeviceSpec
from dagplace.pipeline import PipelineConfig, cluster_memory_limit, evaluate_pipeline, place_graph
from dagplace.simulator import simulate


def test_identity_case():
    g = gen(SyntheticSpec(kind="random-dag", nodes=6, seed=1))
    devs = [DeviceSpec(0, 10**12), DeviceSpec(1, 10**12)]
    rep = evaluate_pipeline(g, devs, DEFAULT_COMM)
    assert rep.makespan["order"] == rep.makespan["adjust"] == g.total_compute
    for p in rep.placements.values():
        assert set(p.assignment.values()) == {0}


def test_large_layered_report():
    g = gen(SyntheticSpec(kind="layered", nodes=4000, seed=0, target_ccr=30.0))
    rep = evaluate_pipeline(g, devices_for(g, 4), DEFAULT_COMM)
    assert rep.node_reduction >= 10 and rep.ccr_reduction >= 2
    doc = rep.to_dict()
    assert doc["node_reduction"] == pytest.approx(rep.node_reduction, rel=1e-6)
    assert rep.placement_seconds > 0


def test_report_is_deterministic():
    g = gen(SyntheticSpec(kind="layered", nodes=300, seed=4, target_ccr=5.0))
    devs = devices_for(g, 3, load=0.6)
    assert evaluate_pipeline(g, devs, DEFAULT_COMM).to_dict() == evaluate_pipeline(g, devs, DEFAULT_COMM).to_dict()


def test_pipeline_with_profiles():
    fam = ProfileFamily(nodes=50, seed=3)
    base = gen(SyntheticSpec(kind="random-dag", nodes=50, seed=3))
    est_devs = [DeviceSpec(i, 10**10) for i in range(2)]
    rep = evaluate_pipeline(base, est_devs, DEFAULT_COMM, PipelineConfig(target_batch=512), fam.profiles())
    assert rep.estimation["target_batch"] == 512
    assert rep.estimated_graph is not None and len(rep.estimated_graph) == 50
    with pytest.raises(ValueError):
        evaluate_pipeline(base, est_devs, DEFAULT_COMM, PipelineConfig(), fam.profiles())


def test_place_graph_strategies_cover_all_nodes():
    g = gen(SyntheticSpec(kind="layered", nodes=200, seed=8, target_ccr=3.0))
    devs = devices_for(g, 3, load=0.6)
    for strategy in ("order", "adjust", "sequential-eval"):
        res = place_graph(g, devs, DEFAULT_COMM, strategy)
        assert sorted(res.placement.assignment) == list(g.node_ids)
        assert simulate(g, res.placement, devs, DEFAULT_COMM).makespan > 0
    with pytest.raises(ValueError):
        place_graph(g, devs, DEFAULT_COMM, "random")


def test_cluster_limit_uses_smallest_device():
    assert cluster_memory_limit([DeviceSpec(0, 100), DeviceSpec(1, 40)], 0.25) == 10


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(strategy="nope")
    with pytest.raises(ValueError):
        PipelineConfig(cluster_mem_fraction=0)
