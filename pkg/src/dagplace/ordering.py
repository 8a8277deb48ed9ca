"""Topological ordering policies.

``m_topo`` is the breadth-first baseline, ``dfs_topo`` gives freed children
priority by pushing them onto the head of the queue, and ``cpd_topo`` does the
same while steering towards the child with the longest path through it.
All ties fall back to ascending node id, so every policy is deterministic.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass

from dagplace.errors import CycleDetected
from dagplace.graph import ComputationGraph, LevelTable, find_cycle


class Policy(str, enum.Enum):
    M_TOPO = "m-topo"
    DFS_TOPO = "dfs-topo"
    CPD_TOPO = "cpd-topo"


@dataclass(frozen=True)
class TopoOrder:
    sequence: tuple[int, ...]
    policy: Policy

    def __len__(self):
        return len(self.sequence)

    def __iter__(self):
        return iter(self.sequence)

    def positions(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.sequence)}

    def is_valid_for(self, graph: ComputationGraph) -> bool:
        if sorted(self.sequence) != list(graph.node_ids):
            return False
        pos = self.positions()
        return all(pos[e.src] < pos[e.dst] for e in graph.edges)


def _indegrees(graph: ComputationGraph) -> dict[int, int]:
    return {i: len(graph.pred[i]) for i in graph.node_ids}


def _raise_cycle(graph: ComputationGraph):
    adj = {i: [s for s, _ in graph.succ[i]] for i in graph.node_ids}
    raise CycleDetected(find_cycle(adj) or [])


def m_topo(graph: ComputationGraph) -> TopoOrder:
    """FIFO queue of zero-indegree nodes; newly freed children go to the tail."""
    indeg = _indegrees(graph)
    queue = deque(i for i in graph.node_ids if indeg[i] == 0)
    out = []
    while queue:
        v = queue.popleft()
        out.append(v)
        for s, _ in graph.succ[v]:
            indeg[s] -= 1
            if indeg[s] == 0:
                queue.append(s)
    if len(out) != len(indeg):
        _raise_cycle(graph)
    return TopoOrder(tuple(out), Policy.M_TOPO)


def dfs_topo(graph: ComputationGraph) -> TopoOrder:
    """Like ``m_topo`` but freed children are pushed to the head of the queue.

    Among children freed by the same node the smallest id ends up first.
    """
    indeg = _indegrees(graph)
    queue = deque(i for i in graph.node_ids if indeg[i] == 0)
    out = []
    while queue:
        v = queue.popleft()
        out.append(v)
        freed = []
        for s, _ in graph.succ[v]:
            indeg[s] -= 1
            if indeg[s] == 0:
                freed.append(s)
        queue.extendleft(sorted(freed, reverse=True))
    if len(out) != len(indeg):
        _raise_cycle(graph)
    return TopoOrder(tuple(out), Policy.DFS_TOPO)


def cpd_topo(graph: ComputationGraph, levels: LevelTable) -> TopoOrder:
    """Critical-path-prioritised depth-first order.

    Sources start sorted by descending cpath.  After emitting a node its
    children are visited in ascending cpath and each freed one is pushed to the
    head, so the freed child with the largest cpath is emitted next.
    """
    cpath = levels.cpath
    indeg = _indegrees(graph)
    queue = deque(sorted((i for i in graph.node_ids if indeg[i] == 0), key=lambda i: (-cpath[i], i)))
    out = []
    while queue:
        v = queue.popleft()
        out.append(v)
        # ascending cpath, descending id: the last one pushed sits at the head
        children = sorted((s for s, _ in graph.succ[v]), key=lambda s: (cpath[s], -s))
        for s in children:
            indeg[s] -= 1
            if indeg[s] == 0:
                queue.appendleft(s)
    if len(out) != len(indeg):
        _raise_cycle(graph)
    return TopoOrder(tuple(out), Policy.CPD_TOPO)


def order_graph(graph: ComputationGraph, policy: Policy | str, levels: LevelTable | None = None) -> TopoOrder:
    policy = Policy(policy)
    if policy is Policy.M_TOPO:
        return m_topo(graph)
    if policy is Policy.DFS_TOPO:
        return dfs_topo(graph)
    if levels is None:
        raise ValueError("cpd-topo needs a level table")
    return cpd_topo(graph, levels)
