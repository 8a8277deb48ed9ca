"""Standard evaluation: extrapolate a large-batch graph from small-batch profiles.

Per-node memory and compute time are fitted as lines in the batch size.  The
memory fit is the one to trust; compute-time extrapolation is only rough.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from dagplace.errors import InsufficientSamples, NodeUniverseMismatch, UnknownNode
from dagplace.graph import CommModel, ComputationGraph, DeviceSpec, OpNode, TensorEdge
from dagplace.ordering import dfs_topo
from dagplace.placement import Placement, sequential_fill

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchProfile:
    batch_size: int
    nodes: dict[int, tuple[int, int]]  # node id -> (memory bytes, compute us)


@dataclass(frozen=True)
class ProfileSet:
    batches: tuple[BatchProfile, ...]
    comm_samples: tuple[tuple[int, float], ...] = ()

    def node_ids(self) -> list[int]:
        return sorted(self.batches[0].nodes) if self.batches else []


@dataclass(frozen=True)
class NodeFit:
    mem_slope: float
    mem_intercept: float
    time_slope: float
    time_intercept: float
    mem_residual: float = 0.0
    time_residual: float = 0.0


@dataclass
class NodeCostModel:
    fits: dict[int, NodeFit]
    batch_sizes: tuple[int, ...] = ()

    def predict_memory(self, node: int, batch: int) -> int:
        f = self.fits[node]
        return max(0, int(round(f.mem_slope * batch + f.mem_intercept)))

    def predict_time(self, node: int, batch: int) -> int:
        f = self.fits[node]
        return max(0, int(round(f.time_slope * batch + f.time_intercept)))

    def diagnostics(self) -> dict:
        mem_res = [f.mem_residual for f in self.fits.values()]
        time_res = [f.time_residual for f in self.fits.values()]
        return {
            "nodes": len(self.fits),
            "batch_sizes": list(self.batch_sizes),
            "max_memory_residual": max(mem_res, default=0.0),
            "max_time_residual": max(time_res, default=0.0),
            "time_estimate": "rough",
        }


def _line_fit(x: np.ndarray, y: np.ndarray):
    """Column-wise least squares ``y ~ slope * x + intercept``; y is (samples, series)."""
    xm = x.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    slope = (dx @ (y - y.mean(axis=0))) / sxx
    intercept = y.mean(axis=0) - slope * xm
    resid = y - (np.outer(x, slope) + intercept)
    return slope, intercept, np.sqrt((resid**2).sum(axis=0))


def fit_node_models(profiles: ProfileSet) -> NodeCostModel:
    sizes = sorted({b.batch_size for b in profiles.batches})
    if len(sizes) < 2:
        raise InsufficientSamples("need profiles at two or more distinct batch sizes")
    ids = profiles.node_ids()
    for b in profiles.batches:
        if sorted(b.nodes) != ids:
            raise InsufficientSamples(f"batch {b.batch_size} does not profile every node")
    x = np.array([b.batch_size for b in profiles.batches], dtype=float)
    mem = np.array([[b.nodes[v][0] for v in ids] for b in profiles.batches], dtype=float)
    tim = np.array([[b.nodes[v][1] for v in ids] for b in profiles.batches], dtype=float)
    ms, mi, mr = _line_fit(x, mem)
    ts, ti, tr = _line_fit(x, tim)
    fits = {
        v: NodeFit(float(ms[j]), float(mi[j]), float(ts[j]), float(ti[j]), float(mr[j]), float(tr[j]))
        for j, v in enumerate(ids)
    }
    return NodeCostModel(fits, tuple(sizes))


def fit_comm_model(samples) -> CommModel:
    """Least-squares ``t = k * bytes + b``; negative constants are clamped to 0."""
    pts = [(float(d), float(t)) for d, t in samples]
    if len(pts) < 2 or len({d for d, _ in pts}) < 2:
        raise InsufficientSamples("need two or more samples with distinct byte counts")
    x = np.array([d for d, _ in pts])
    y = np.array([t for _, t in pts])[:, None]
    k, b, _ = _line_fit(x, y)
    k, b = float(k[0]), float(b[0])
    if k < 0:
        log.warning("fitted per-byte cost %.3g < 0; clamping to 0", k)
        k = 0.0
    if b < 0:
        log.warning("fitted latency %.3g < 0; clamping to 0", b)
        b = 0.0
    return CommModel(k=k, b=b)


def estimate_graph(
    base: ComputationGraph,
    models: NodeCostModel,
    target_batch: int,
    base_batch: int | None = None,
    edge_overrides: dict[tuple[int, int], int] | None = None,
) -> ComputationGraph:
    """Predict node costs at ``target_batch``.

    Edge tensors scale with ``target_batch / base_batch`` (``base_batch``
    defaults to the largest profiled batch); ``edge_overrides`` pins exact
    byte counts for individual edges.
    """
    missing = [v for v in base.node_ids if v not in models.fits]
    if missing:
        raise UnknownNode(f"no cost model for nodes {missing[:5]}")
    if base_batch is None:
        base_batch = max(models.batch_sizes) if models.batch_sizes else target_batch
    ratio = target_batch / base_batch
    overrides = edge_overrides or {}
    nodes = [
        OpNode(
            id=n.id,
            name=n.name,
            compute_time=models.predict_time(n.id, target_batch),
            memory=models.predict_memory(n.id, target_batch),
            colocation_group=n.colocation_group,
        )
        for n in base.nodes
    ]
    edges = [
        TensorEdge(e.src, e.dst, overrides.get((e.src, e.dst), int(round(e.tensor_bytes * ratio))))
        for e in base.edges
    ]
    return ComputationGraph(nodes, edges)


def sequential_eval_placement(estimated: ComputationGraph, devices: list[DeviceSpec]) -> Placement:
    """Memory-capped fill along DFS-TOPO: as few devices as the order allows."""
    return sequential_fill(estimated, dfs_topo(estimated), devices)


@dataclass
class DeviationReport:
    memory: dict[int, float]
    time: dict[int, float]
    zero_actual_memory: list[int] = field(default_factory=list)
    zero_actual_time: list[int] = field(default_factory=list)

    @property
    def mean_memory(self) -> float:
        return float(np.mean(list(self.memory.values()))) if self.memory else 0.0

    @property
    def mean_time(self) -> float:
        return float(np.mean(list(self.time.values()))) if self.time else 0.0

    def fraction_memory_within(self, bound: float) -> float:
        if not self.memory:
            return 1.0
        return sum(1 for d in self.memory.values() if d <= bound) / len(self.memory)

    def to_dict(self) -> dict:
        return {
            "mean_memory_deviation": self.mean_memory,
            "mean_time_deviation": self.mean_time,
            "memory": {str(k): v for k, v in sorted(self.memory.items())},
            "time": {str(k): v for k, v in sorted(self.time.items())},
            "zero_actual_memory": self.zero_actual_memory,
            "zero_actual_time": self.zero_actual_time,
        }


def relative_deviation(estimated: float, actual: float) -> float:
    return abs(estimated - actual) / actual


def deviation_report(estimated: ComputationGraph, measured: ComputationGraph) -> DeviationReport:
    if estimated.node_ids != measured.node_ids:
        raise NodeUniverseMismatch("estimated and measured graphs cover different nodes")
    rep = DeviationReport({}, {})
    for v in measured.node_ids:
        e, a = estimated.node[v], measured.node[v]
        if a.memory == 0:
            rep.zero_actual_memory.append(v)
        else:
            rep.memory[v] = relative_deviation(e.memory, a.memory)
        if a.compute_time == 0:
            rep.zero_actual_time.append(v)
        else:
            rep.time[v] = relative_deviation(e.compute_time, a.compute_time)
    return rep
