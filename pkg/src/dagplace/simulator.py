"""Deterministic discrete-event evaluation of a placement.

Each device owns three FIFO engines: compute, send and receive.  A
cross-device edge becomes a transfer that holds the sender's send engine and
the receiver's receive engine at the same time, so compute overlaps with
communication but concurrent transfers through one device queue up.
Memory is accounted statically: a device's peak is the sum of its nodes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from dagplace import _kernels
from dagplace.errors import CycleDetected, InstanceTooLarge, NoFeasiblePlacement, UnplacedNode
from dagplace.graph import CommModel, ComputationGraph, DeviceSpec, comm_time, find_cycle
from dagplace.placement import Placement

MAX_ORACLE_NODES = 12
MAX_ORACLE_DEVICES = 3

KIND_ORDER = {"compute": 0, "send": 1, "recv": 2}


@dataclass(frozen=True)
class SimTask:
    kind: str  # "compute" | "send" | "recv"
    ref: int | tuple[int, int]  # node id, or (src, dst) for transfers
    device: int
    start: int
    end: int

    @property
    def duration(self) -> int:
        return self.end - self.start

    def to_dict(self) -> dict:
        ref = self.ref if isinstance(self.ref, int) else list(self.ref)
        return {"kind": self.kind, "ref": ref, "device": self.device, "start": self.start, "end": self.end}


@dataclass
class SimulationReport:
    makespan: int
    busy: dict[int, dict[str, list[tuple[int, int]]]]
    peak_memory: dict[int, int]
    transfer_count: int
    transfer_bytes: int
    oom_flag: bool
    tasks: list[SimTask] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "busy": {
                str(d): {engine: [list(iv) for iv in ivs] for engine, ivs in engines.items()}
                for d, engines in sorted(self.busy.items())
            },
            "peak_memory": {str(d): m for d, m in sorted(self.peak_memory.items())},
            "transfer_count": self.transfer_count,
            "transfer_bytes": self.transfer_bytes,
            "oom_flag": self.oom_flag,
            "engines": "one compute, one send and one receive engine per device (per-direction transfers)",
        }


class _DenseGraph:
    """Index-based view of a graph in the layout the kernels expect."""

    def __init__(self, graph: ComputationGraph, model: CommModel):
        self.ids = graph.node_ids
        self.index = {v: i for i, v in enumerate(self.ids)}
        self.edges = graph.sorted_edges
        self.w = [graph.node[v].compute_time for v in self.ids]
        self.mem = [graph.node[v].memory for v in self.ids]
        self.edge_src = [self.index[e.src] for e in self.edges]
        self.edge_dst = [self.index[e.dst] for e in self.edges]
        self.edge_cost = [comm_time(e.tensor_bytes, model) for e in self.edges]
        per_node: list[list[int]] = [[] for _ in self.ids]
        for ei, s in enumerate(self.edge_src):
            per_node[s].append(ei)
        self.succ_ptr = [0]
        self.succ_edge: list[int] = []
        for lst in per_node:
            self.succ_edge.extend(lst)
            self.succ_ptr.append(len(self.succ_edge))

    def run(self, dev: list[int], n_devices: int):
        return _kernels.simulate(
            self.w, dev, self.succ_ptr, self.succ_edge, self.edge_src, self.edge_dst, self.edge_cost, n_devices
        )


def simulate(
    graph: ComputationGraph, placement: Placement, devices: list[DeviceSpec], model: CommModel
) -> SimulationReport:
    devs = sorted(devices, key=lambda d: d.id)
    dev_index = {d.id: i for i, d in enumerate(devs)}
    dense = _DenseGraph(graph, model)
    dev = []
    for v in dense.ids:
        d = placement.assignment.get(v)
        if d is None or d not in dev_index:
            raise UnplacedNode(v)
        dev.append(dev_index[d])
    node_start, node_end, edge_start, edge_end, completed = dense.run(dev, len(devs))
    if completed != len(dense.ids):
        adj = {i: [s for s, _ in graph.succ[i]] for i in graph.node_ids}
        raise CycleDetected(find_cycle(adj) or [])

    tasks: list[SimTask] = []
    for i, v in enumerate(dense.ids):
        tasks.append(SimTask("compute", v, devs[dev[i]].id, node_start[i], node_end[i]))
    transfer_count = 0
    transfer_bytes = 0
    for ei, e in enumerate(dense.edges):
        if edge_start[ei] < 0:
            continue
        transfer_count += 1
        transfer_bytes += e.tensor_bytes
        src_dev = devs[dev[dense.edge_src[ei]]].id
        dst_dev = devs[dev[dense.edge_dst[ei]]].id
        tasks.append(SimTask("send", (e.src, e.dst), src_dev, edge_start[ei], edge_end[ei]))
        tasks.append(SimTask("recv", (e.src, e.dst), dst_dev, edge_start[ei], edge_end[ei]))
    tasks.sort(key=lambda t: (t.start, KIND_ORDER[t.kind], t.ref if isinstance(t.ref, tuple) else (t.ref,)))

    busy: dict[int, dict[str, list[tuple[int, int]]]] = {
        d.id: {"compute": [], "send": [], "recv": []} for d in devs
    }
    for t in tasks:
        if t.end > t.start:
            busy[t.device][t.kind].append((t.start, t.end))
    peak = {d.id: 0 for d in devs}
    for i, v in enumerate(dense.ids):
        peak[devs[dev[i]].id] += dense.mem[i]
    oom = placement.oom_risk or any(peak[d.id] > d.memory_capacity for d in devs)
    makespan = max((t.end for t in tasks), default=0)
    return SimulationReport(makespan, busy, peak, transfer_count, transfer_bytes, oom, tasks)


def makespan_of(graph: ComputationGraph, assignment: dict[int, int], devices: list[DeviceSpec], model: CommModel) -> int:
    return simulate(graph, Placement(assignment, {}), devices, model).makespan


def brute_force_optimal(
    graph: ComputationGraph, devices: list[DeviceSpec], model: CommModel
) -> tuple[Placement, int]:
    """Exhaustive minimum-makespan placement over all memory-feasible assignments.

    Assignments are enumerated lexicographically over nodes in id order, so
    the first optimum found is the lexicographically smallest one.
    """
    n, m = len(graph.node_ids), len(devices)
    if n > MAX_ORACLE_NODES or m > MAX_ORACLE_DEVICES:
        raise InstanceTooLarge(f"oracle limited to {MAX_ORACLE_NODES} nodes / {MAX_ORACLE_DEVICES} devices")
    devs = sorted(devices, key=lambda d: d.id)
    caps = [d.memory_capacity for d in devs]
    dense = _DenseGraph(graph, model)
    best: tuple[int, ...] | None = None
    best_t = 0
    for combo in itertools.product(range(m), repeat=n):
        used = [0] * m
        for i, d in enumerate(combo):
            used[d] += dense.mem[i]
        if any(u > c for u, c in zip(used, caps)):
            continue
        _, node_end, _, edge_end, _ = dense.run(list(combo), m)
        t = max(max(node_end, default=0), max(edge_end, default=0))
        if best is None or t < best_t:
            best, best_t = combo, t
    if best is None:
        raise NoFeasiblePlacement("no assignment satisfies every device's memory capacity")
    assignment = {v: devs[best[i]].id for i, v in enumerate(dense.ids)}
    used = {d.id: 0 for d in devs}
    for i, v in enumerate(dense.ids):
        used[devs[best[i]].id] += dense.mem[i]
    return Placement(assignment, used), best_t
