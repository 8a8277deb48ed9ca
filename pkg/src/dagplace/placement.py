"""Device assignment for (coarse) graphs.

``order_place`` fills devices one after another along a topological order.
``adjusting_placement`` walks the same order but moves a node off the
previous node's device when another device lets it start earlier by more than
the worst-case cost of shipping its outputs back.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from dagplace.errors import InvalidClusterMap
from dagplace.fusion import Cluster, ClusterMap
from dagplace.graph import CommModel, ComputationGraph, DeviceSpec, comm_time
from dagplace.ordering import TopoOrder

INF = math.inf


@dataclass(frozen=True)
class Decision:
    """One step of the adjusting heuristic, kept for replay and audit."""

    node: int
    prev_device: int
    chosen: int
    est: tuple[float, ...]  # indexed like the device list; inf = no memory
    back_cost: int
    relocated: bool
    fallback: bool

    def to_dict(self, device_ids) -> dict:
        return {
            "node": self.node,
            "prev_device": self.prev_device,
            "chosen": self.chosen,
            "est": {str(d): (None if math.isinf(t) else int(t)) for d, t in zip(device_ids, self.est)},
            "back_cost": self.back_cost,
            "relocated": self.relocated,
            "fallback": self.fallback,
        }


@dataclass
class Placement:
    assignment: dict[int, int]
    per_device_memory: dict[int, int]
    oom_risk: bool = False
    decision_log: list[Decision] = field(default_factory=list)

    def devices_used(self) -> int:
        return len(set(self.assignment.values()))


def _device_memory(graph: ComputationGraph, assignment: dict[int, int], devices) -> dict[int, int]:
    used = {d.id: 0 for d in devices}
    for v, d in assignment.items():
        used[d] = used.get(d, 0) + graph.node[v].memory
    return used


def sequential_fill(graph: ComputationGraph, order: TopoOrder, devices: list[DeviceSpec]) -> Placement:
    """Fill the first device until the next node no longer fits, then move on.

    Once every device is exhausted the remaining nodes each go to the device
    with the most free memory and the placement is flagged as OOM risk.
    """
    devs = sorted(devices, key=lambda d: d.id)
    free = [d.memory_capacity for d in devs]
    cur = 0
    assignment = {}
    oom = False
    for v in order.sequence:
        m = graph.node[v].memory
        while cur < len(devs) and free[cur] < m:
            cur += 1
        if cur < len(devs):
            idx = cur
        else:
            oom = True
            idx = max(range(len(devs)), key=lambda i: (free[i], -i))
        free[idx] -= m
        assignment[v] = devs[idx].id
    return Placement(assignment, _device_memory(graph, assignment, devs), oom_risk=oom)


def order_place(coarse: ComputationGraph, order: TopoOrder, devices: list[DeviceSpec]) -> Placement:
    return sequential_fill(coarse, order, devices)


class SchedulerState:
    """Mutable bookkeeping for one ``adjusting_placement`` run.

    With ``link_aware`` set, every cross-device input is also booked as a
    transfer on the sender's send timeline and the receiver's receive
    timeline, so queued transfers delay the data-ready time.
    """

    def __init__(self, graph: ComputationGraph, devices: list[DeviceSpec], link_aware: bool = True):
        self.graph = graph
        self.link_aware = link_aware
        self.device_ids = [d.id for d in devices]
        self.placement: dict[int, int] = {}
        self.fin_t: dict[int, int] = {}
        self.busy: dict[int, list[tuple[int, int]]] = {d.id: [] for d in devices}
        self.send_busy: dict[int, list[tuple[int, int]]] = {d.id: [] for d in devices}
        self.recv_busy: dict[int, list[tuple[int, int]]] = {d.id: [] for d in devices}
        self.ava_m: dict[int, int] = {d.id: d.memory_capacity for d in devices}

    def _transfers(self, node: int, device: int, model: CommModel):
        """Input transfers for ``node`` on ``device``: (start, end, src_device) each."""
        inputs = sorted(
            (self.fin_t[p], p, comm_time(nbytes, model))
            for p, nbytes in self.graph.pred[node]
            if self.placement[p] != device
        )
        send = {d: list(v) for d, v in self.send_busy.items()} if inputs else self.send_busy
        recv = list(self.recv_busy[device])
        booked = []
        for ready, p, c in inputs:
            src = self.placement[p]
            t = ready
            while True:
                t1 = earliest_gap(send[src], t, c)
                t2 = earliest_gap(recv, t1, c)
                if t2 == t1:
                    break
                t = t2
            if c > 0:
                bisect.insort(send[src], (t1, t1 + c))
                bisect.insort(recv, (t1, t1 + c))
            booked.append((t1, t1 + c, src))
        return booked

    def ready_time(self, node: int, device: int, model: CommModel) -> int:
        pre_t = 0
        for p, nbytes in self.graph.pred[node]:
            if self.placement[p] == device:
                t = self.fin_t[p]
            elif self.link_aware:
                continue
            else:
                t = self.fin_t[p] + comm_time(nbytes, model)
            if t > pre_t:
                pre_t = t
        if self.link_aware:
            for _, end, _ in self._transfers(node, device, model):
                if end > pre_t:
                    pre_t = end
        return pre_t

    def earliest_slot(self, device: int, after: int, duration: int) -> int:
        """Start of the first idle gap of ``duration`` at or after ``after``."""
        return earliest_gap(self.busy[device], after, duration)

    def commit(self, node: int, device: int, start: int, model: CommModel | None = None):
        w = self.graph.node[node].compute_time
        if self.link_aware and model is not None:
            for s, e, src in self._transfers(node, device, model):
                if e > s:
                    bisect.insort(self.send_busy[src], (s, e))
                    bisect.insort(self.recv_busy[device], (s, e))
        self.placement[node] = device
        self.fin_t[node] = start + w
        self.ava_m[device] -= self.graph.node[node].memory
        if w > 0:
            bisect.insort(self.busy[device], (start, start + w))


def earliest_gap(intervals: list[tuple[int, int]], after: int, duration: int) -> int:
    """First ``t >= after`` such that ``[t, t + duration)`` avoids every sorted busy interval."""
    t = after
    for s, e in intervals:
        if e <= t:
            continue
        if s >= t + duration:
            break
        t = e
    return t


def compute_est(state: SchedulerState, node: int, device: int, model: CommModel) -> float:
    """Earliest start of ``node`` on ``device``; infinite when memory is short."""
    if state.ava_m[device] < state.graph.node[node].memory:
        return INF
    return _est(state, node, device, model)


def _est(state: SchedulerState, node: int, device: int, model: CommModel) -> int:
    pre_t = state.ready_time(node, device, model)
    return state.earliest_slot(device, pre_t, state.graph.node[node].compute_time)


def back_cost(graph: ComputationGraph, node: int, model: CommModel) -> int:
    return max((comm_time(nbytes, model) for _, nbytes in graph.succ[node]), default=0)


def adjusting_placement(
    coarse: ComputationGraph,
    order: TopoOrder,
    devices: list[DeviceSpec],
    model: CommModel,
    link_aware: bool = True,
) -> Placement:
    """Place each node on the previous node's device unless another device
    starts it earlier by more than its largest outgoing transfer time.

    ``link_aware=False`` prices every cross-device input at a flat
    ``Fin_t + c`` with no link queueing.
    """
    devs = sorted(devices, key=lambda d: d.id)
    state = SchedulerState(coarse, devs, link_aware)
    ids = state.device_ids
    log: list[Decision] = []
    oom = False
    prev = ids[0]
    for v in order.sequence:
        bc = back_cost(coarse, v, model)
        est = tuple(compute_est(state, v, d, model) for d in ids)
        k = ids.index(prev)
        best = min(range(len(ids)), key=lambda i: (est[i], i))
        fallback = False
        if math.isinf(est[best]):
            fallback = True
            oom = True
            chosen = max(ids, key=lambda d: (state.ava_m[d], -d))
            relocated = chosen != prev
        elif est[k] - est[best] > bc:
            chosen = ids[best]
            relocated = True
        else:
            chosen = prev
            relocated = False
        start = _est(state, v, chosen, model) if fallback else int(est[ids.index(chosen)])
        state.commit(v, chosen, start, model)
        log.append(Decision(v, prev, chosen, est, bc, relocated, fallback))
        prev = chosen
    return Placement(
        dict(state.placement),
        _device_memory(coarse, state.placement, devs),
        oom_risk=oom,
        decision_log=log,
    )


def expand_placement(clusters: ClusterMap, coarse_placement: Placement, graph: ComputationGraph) -> Placement:
    """Give every original node its cluster's device."""
    assignment = {}
    for v in graph.node_ids:
        cid = clusters.node_to_cluster.get(v)
        if cid is None or cid not in coarse_placement.assignment:
            raise InvalidClusterMap(f"node {v} has no placed cluster")
        assignment[v] = coarse_placement.assignment[cid]
    used = {d: 0 for d in coarse_placement.per_device_memory}
    for v, d in assignment.items():
        used[d] = used.get(d, 0) + graph.node[v].memory
    return Placement(assignment, used, coarse_placement.oom_risk, list(coarse_placement.decision_log))


def identity_clusters(graph: ComputationGraph) -> ClusterMap:
    """Singleton clusters whose ids equal the node ids."""
    seq = graph.node_ids
    clusters = tuple(Cluster(v, (v,), graph.node[v].compute_time, graph.node[v].memory) for v in seq)
    return ClusterMap(clusters, {v: v for v in seq}, tuple(range(1, len(seq))), tuple(seq))
