import itertools

import pytest
from hypothesis import given

from conftest import UNIT, dags, make_graph
from dagplace.errors import CycleDetected
from dagplace.generators import SyntheticSpec, gen
from dagplace.graph import compute_levels
from dagplace.ordering import Policy, cpd_topo, dfs_topo, m_topo, order_graph

CHAIN = make_graph([1, 1, 1], [(0, 1, 1), (1, 2, 1)])
DIAMOND = make_graph([1] * 4, [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1)])
TWO_CHAINS = gen(SyntheticSpec(kind="parallel-chains", nodes=8, chains=2, seed=0))


def cut_edges(graph, sequence, split):
    first = set(sequence[:split])
    return sum(1 for e in graph.edges if (e.src in first) != (e.dst in first))


def all_orders(graph, policy):
    return order_graph(graph, policy, compute_levels(graph, UNIT))


@pytest.mark.parametrize("policy", list(Policy))
def test_chain_has_unique_order(policy):
    assert all_orders(CHAIN, policy).sequence == (0, 1, 2)


def test_m_topo_ties_by_id():
    g = make_graph([1, 1, 1], [(0, 2, 0), (1, 2, 0)])
    assert m_topo(g).sequence == (0, 1, 2)


def test_m_topo_alternates_parallel_chains():
    seq = m_topo(TWO_CHAINS).sequence
    assert seq == (0, 4, 1, 5, 2, 6, 3, 7)
    assert cut_edges(TWO_CHAINS, seq, 4) >= 2


def test_dfs_topo_finishes_one_chain_first():
    seq = dfs_topo(TWO_CHAINS).sequence
    assert seq == tuple(range(8))
    assert cut_edges(TWO_CHAINS, seq, 4) == 0


def test_dfs_topo_diamond():
    assert dfs_topo(DIAMOND).sequence == (0, 1, 2, 3)


def test_cpd_topo_follows_critical_child():
    g = make_graph([1] * 4, [(0, 1, 10), (0, 2, 1), (1, 3, 1), (2, 3, 1)])
    assert cpd_topo(g, compute_levels(g, UNIT)).sequence == (0, 1, 2, 3)
    # same shape with the heavy branch on the larger id: cpath beats the id tie-break
    g = make_graph([1] * 4, [(0, 2, 10), (0, 1, 1), (2, 3, 1), (1, 3, 1)])
    assert cpd_topo(g, compute_levels(g, UNIT)).sequence == (0, 2, 1, 3)
    assert dfs_topo(g).sequence == (0, 1, 2, 3)


def test_cpd_topo_emits_longer_chain_first():
    g = make_graph([1, 1, 3, 3], [(0, 1, 1), (2, 3, 3)])
    lv = compute_levels(g, UNIT)
    assert lv.cpath[2] == 3 * lv.cpath[0]
    assert cpd_topo(g, lv).sequence == (2, 3, 0, 1)


def test_cpd_topo_on_two_chains_cuts_nothing():
    seq = cpd_topo(TWO_CHAINS, compute_levels(TWO_CHAINS, UNIT)).sequence
    assert cut_edges(TWO_CHAINS, seq, 4) == 0


def test_cycle_raises():
    g = make_graph([1, 1], [(0, 1, 0), (1, 0, 0)])
    for fn in (m_topo, dfs_topo):
        with pytest.raises(CycleDetected):
            fn(g)


def test_cpd_needs_levels():
    with pytest.raises(ValueError):
        order_graph(CHAIN, "cpd-topo")


def _is_topological(graph, seq):
    pos = {v: i for i, v in enumerate(seq)}
    return all(pos[e.src] < pos[e.dst] for e in graph.edges)


@given(dags(max_nodes=12))
def test_every_policy_returns_a_topological_permutation(graph):
    lv = compute_levels(graph, UNIT)
    for policy in Policy:
        order = order_graph(graph, policy, lv)
        assert sorted(order.sequence) == list(graph.node_ids)
        assert order.is_valid_for(graph)


@given(dags(max_nodes=6))
def test_orders_are_among_enumerated_topological_orders(graph):
    valid = {p for p in itertools.permutations(graph.node_ids) if _is_topological(graph, p)}
    lv = compute_levels(graph, UNIT)
    for policy in Policy:
        assert order_graph(graph, policy, lv).sequence in valid


@given(dags(max_nodes=12))
def test_orders_are_deterministic(graph):
    lv = compute_levels(graph, UNIT)
    for policy in Policy:
        assert order_graph(graph, policy, lv) == order_graph(graph, policy, lv)
