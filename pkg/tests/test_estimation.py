import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_graph
from dagplace.errors import InsufficientSamples, NodeUniverseMismatch, UnknownNode
from dagplace.estimation import (
    BatchProfile,
    ProfileSet,
    deviation_report,
    estimate_graph,
    fit_comm_model,
    fit_node_models,
    sequential_eval_placement,
)
from dagplace.generators import ProfileFamily, SyntheticSpec, gen
from dagplace.graph import ComputationGraph, DeviceSpec, OpNode
from dagplace.ordering import m_topo
from dagplace.placement import sequential_fill


def profiles(mem_by_batch, time_by_batch=None):
    time_by_batch = time_by_batch or {b: 1 for b in mem_by_batch}
    return ProfileSet(tuple(BatchProfile(b, {0: (m, time_by_batch[b])}) for b, m in mem_by_batch.items()))


def test_two_point_fit():
    m = fit_node_models(profiles({32: 100, 64: 200}))
    f = m.fits[0]
    assert f.mem_slope == pytest.approx(3.125)
    assert f.mem_intercept == pytest.approx(0.0, abs=1e-9)
    assert m.predict_memory(0, 128) == 400


def test_flat_fit():
    m = fit_node_models(profiles({32: 50, 64: 50, 128: 50}))
    assert m.fits[0].mem_slope == pytest.approx(0.0)
    assert m.predict_memory(0, 512) == 50


def test_noisy_slope_recovered():
    rng = np.random.default_rng(7)
    sizes = [8, 16, 32, 64, 128]
    batches = tuple(BatchProfile(b, {0: (int(round(10 * b + 5 + rng.normal(0, 5))), 1)}) for b in sizes for _ in range(3))
    slope = fit_node_models(ProfileSet(batches)).fits[0].mem_slope
    assert abs(slope - 10) <= 0.5


def test_predictions_clamped_at_zero():
    m = fit_node_models(profiles({32: 100, 64: 10}, {32: 50, 64: 5}))
    assert m.predict_memory(0, 512) == 0
    assert m.predict_time(0, 512) == 0


def test_needs_two_batch_sizes():
    with pytest.raises(InsufficientSamples):
        fit_node_models(profiles({32: 10}))
    bad = ProfileSet((BatchProfile(1, {0: (1, 1)}), BatchProfile(2, {1: (1, 1)})))
    with pytest.raises(InsufficientSamples):
        fit_node_models(bad)


@given(st.integers(1, 10**5), st.integers(0, 10**7), st.sampled_from([16, 32, 64]))
def test_prediction_at_a_knot(slope, intercept, b):
    m = fit_node_models(profiles({b: slope * b + intercept, 2 * b: slope * 2 * b + intercept}))
    assert m.predict_memory(0, b) == slope * b + intercept


@given(st.integers(1, 1000), st.integers(0, 10**6))
def test_doubling_batch(slope, intercept):
    m = fit_node_models(profiles({8: slope * 8 + intercept, 16: slope * 16 + intercept, 32: slope * 32 + intercept}))
    at_b, at_2b = m.predict_memory(0, 256), m.predict_memory(0, 512)
    assert at_2b - intercept == pytest.approx(2 * (at_b - intercept), abs=2)


def test_noise_free_family_is_recovered():
    fam = ProfileFamily(nodes=200, seed=1, noise=0.0, iterations=1)
    models = fit_node_models(fam.profiles())
    actual = fam.graph_at(512)
    rep = deviation_report(estimate_graph(actual, models, 512), actual)
    assert rep.mean_memory < 0.01


def test_estimate_graph_scales_edges_and_keeps_structure():
    base = make_graph([1, 1], [(0, 1, 100)], memory=[1, 1])
    batches = tuple(BatchProfile(b, {0: (b, b), 1: (2 * b, b)}) for b in (32, 64))
    est = estimate_graph(base, fit_node_models(ProfileSet(batches)), 256)
    assert est.node[1].memory == 512 and est.node[0].compute_time == 256
    assert est.edges[0].tensor_bytes == 400  # 256 / 64 times the base bytes
    est = estimate_graph(base, fit_node_models(ProfileSet(batches)), 256, base_batch=32, edge_overrides={(0, 1): 7})
    assert est.edges[0].tensor_bytes == 7


def test_estimate_graph_unknown_node():
    models = fit_node_models(profiles({1: 1, 2: 2}))
    with pytest.raises(UnknownNode):
        estimate_graph(make_graph([1, 1]), models, 4)


# comm model


def test_comm_two_points():
    m = fit_comm_model([(0, 7), (10, 27)])
    assert m.k == pytest.approx(2.0) and m.b == pytest.approx(7.0)


def test_comm_constant_latency():
    m = fit_comm_model([(0, 40), (100, 40), (1000, 40)])
    assert m.k == pytest.approx(0.0, abs=1e-12) and m.b == pytest.approx(40.0)


def test_comm_noisy_samples():
    rng = np.random.default_rng(3)
    d = rng.integers(1_000, 1_000_000, 100)
    t = 0.001 * d + 50 + rng.normal(0, 2, 100)
    m = fit_comm_model(list(zip(d.tolist(), t.tolist())))
    assert abs(m.k - 0.001) / 0.001 <= 0.02


def test_comm_negative_latency_clamped(caplog):
    with caplog.at_level(logging.WARNING):
        m = fit_comm_model([(10, 0), (20, 20)])
    assert m.b == 0.0 and "clamping" in caplog.text


def test_comm_needs_distinct_sizes():
    with pytest.raises(InsufficientSamples):
        fit_comm_model([(5, 1), (5, 2)])


# sequential evaluation placement


def test_sequential_eval_one_device():
    g = make_graph([1] * 3, memory=[10] * 3)
    p = sequential_eval_placement(g, [DeviceSpec(0, 100), DeviceSpec(1, 100)])
    assert set(p.assignment.values()) == {0}


def test_sequential_eval_rounds_up_devices():
    g = make_graph([1] * 23, [(i, i + 1, 1) for i in range(22)], memory=[10] * 23)
    p = sequential_eval_placement(g, [DeviceSpec(i, 100) for i in range(4)])
    assert p.devices_used() == 3


def test_chain_shape_split():
    g = gen(SyntheticSpec(kind="parallel-chains", nodes=8, chains=2, seed=0))
    g = ComputationGraph([OpNode(n.id, n.name, n.compute_time, 10) for n in g.nodes], g.edges)  # 4 nodes per device
    devs = [DeviceSpec(0, 40), DeviceSpec(1, 40)]

    def cut(p):
        return sum(1 for e in g.edges if p.assignment[e.src] != p.assignment[e.dst])

    assert cut(sequential_eval_placement(g, devs)) == 0
    assert cut(sequential_fill(g, m_topo(g), devs)) >= 2


# deviation


def test_deviation_identity_and_scaling():
    g = make_graph([10, 20], memory=[100, 200])
    assert deviation_report(g, g).mean_memory == 0.0
    scaled = make_graph([11, 22], memory=[110, 220])
    rep = deviation_report(scaled, g)
    assert rep.mean_memory == pytest.approx(0.1) and rep.mean_time == pytest.approx(0.1)
    assert rep.fraction_memory_within(0.2) == 1.0


def test_deviation_skips_zero_actual():
    est = make_graph([1, 1], memory=[5, 100])
    act = make_graph([1, 1], memory=[0, 100])
    rep = deviation_report(est, act)
    assert rep.zero_actual_memory == [0] and rep.mean_memory == 0.0


def test_deviation_node_mismatch():
    with pytest.raises(NodeUniverseMismatch):
        deviation_report(make_graph([1]), make_graph([1, 1]))


def test_profile_family_is_seeded():
    a, b = ProfileFamily(nodes=20, seed=5), ProfileFamily(nodes=20, seed=5)
    assert a.measure(64) == b.measure(64)
    assert a.measure(64, stream=0) != a.measure(64, stream=1)
