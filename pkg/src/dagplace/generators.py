"""Seeded synthetic graph families for tests, benchmarks and the ``gen`` command."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dagplace.errors import UnreachableTargetCCR
from dagplace.graph import CommModel, ComputationGraph, DeviceSpec, OpNode, TensorEdge, comm_time

DEFAULT_COMM = CommModel(k=0.001, b=10.0)
KINDS = ("layered", "random-dag", "parallel-chains")
CALIBRATION_ROUNDS = 12
CCR_TOLERANCE = 0.2


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "layered"
    nodes: int = 1000
    seed: int = 0
    layer_width: int = 8
    edges_per_node: float = 1.7
    target_ccr: float | None = None
    compute_mean: float = 40.0  # us
    memory_mean: float = 4.0e6  # bytes
    memory_sigma: float = 0.8
    bytes_mean: float = 2.0e5
    source_fraction: float = 0.25  # layered: share of parameter-like source nodes
    chains: int = 2  # parallel-chains
    comm: CommModel = DEFAULT_COMM

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.nodes < 1:
            raise ValueError("nodes must be >= 1")


def _lognormal(rng, mean, sigma, size):
    mu = math.log(mean) - sigma * sigma / 2
    return rng.lognormal(mu, sigma, size)


def _layered_edges(spec: SyntheticSpec, rng) -> tuple[int, list[tuple[int, int]]]:
    n = spec.nodes
    n_src = int(n * spec.source_fraction) if n > 4 else 0
    n_op = n - n_src
    layers: list[list[int]] = []
    nid = n_src
    while nid < n:
        # widths swing between narrow trunks and wide blocks
        wide = rng.random() < 0.3
        width = int(rng.integers(1, max(2, (2 if wide else 1) * spec.layer_width) + 1))
        width = min(width, n - nid)
        layers.append(list(range(nid, nid + width)))
        nid += width
    edges: set[tuple[int, int]] = set()
    op_targets = max(0, n_op - len(layers[0]) if layers else 0)
    budget = spec.edges_per_node * n - n_src
    extra_mean = max(0.0, budget / op_targets - 1.0) if op_targets else 0.0
    for li in range(1, len(layers)):
        for v in layers[li]:
            want = 1 + int(rng.poisson(extra_mean))
            for _ in range(want):
                back = 1
                if rng.random() < 0.2:
                    back = int(rng.integers(2, 5))
                src_layer = layers[max(0, li - back)]
                edges.add((int(src_layer[rng.integers(len(src_layer))]), v))
    for s in range(n_src):
        v = int(rng.integers(n_src, n)) if n_op else None
        if v is not None:
            edges.add((s, v))
    return n, sorted(edges)


def _random_dag_edges(spec: SyntheticSpec, rng) -> tuple[int, list[tuple[int, int]]]:
    n = spec.nodes
    perm = rng.permutation(n)
    p = min(1.0, 2.0 * spec.edges_per_node / max(1, n - 1))
    edges = []
    for j in range(1, n):
        k = int(rng.binomial(j, p))
        if k:
            for i in rng.choice(j, size=k, replace=False):
                edges.append((int(perm[i]), int(perm[j])))
    return n, sorted(edges)


def _chain_edges(spec: SyntheticSpec) -> tuple[int, list[tuple[int, int]]]:
    n, c = spec.nodes, spec.chains
    length = n // c
    edges = [(ci * length + j, ci * length + j + 1) for ci in range(c) for j in range(length - 1)]
    return length * c, edges


def _calibrate(raw: np.ndarray, total_w: int, spec: SyntheticSpec) -> np.ndarray:
    """Scale raw edge sizes so the graph's CCR lands near ``spec.target_ccr``."""
    k, b = spec.comm.k, spec.comm.b
    target = spec.target_ccr * total_w
    fixed = b * len(raw)
    if len(raw) == 0 or k <= 0 or target <= fixed:
        raise UnreachableTargetCCR(
            f"target CCR {spec.target_ccr} unreachable: per-edge latency alone gives {fixed / max(total_w, 1):.3f}"
        )
    scale = (target - fixed) / (k * raw.sum())
    nbytes = np.maximum(0, np.rint(raw * scale)).astype(np.int64)
    for _ in range(CALIBRATION_ROUNDS):
        achieved = sum(comm_time(int(x), spec.comm) for x in nbytes)
        if abs(achieved / target - 1.0) < 1e-3:
            break
        variable = achieved - fixed
        if variable <= 0:
            break
        scale *= (target - fixed) / variable
        nbytes = np.maximum(0, np.rint(raw * scale)).astype(np.int64)
    achieved = sum(comm_time(int(x), spec.comm) for x in nbytes) / total_w
    if abs(achieved / spec.target_ccr - 1.0) > CCR_TOLERANCE:
        raise UnreachableTargetCCR(f"calibration reached CCR {achieved:.3f}, target {spec.target_ccr}")
    return nbytes


def gen(spec: SyntheticSpec) -> ComputationGraph:
    """Generate a graph; identical specs (seed included) give identical graphs."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "layered":
        n, pairs = _layered_edges(spec, rng)
    elif spec.kind == "random-dag":
        n, pairs = _random_dag_edges(spec, rng)
    else:
        n, pairs = _chain_edges(spec)
    w = np.maximum(1, np.rint(_lognormal(rng, spec.compute_mean, 0.9, n))).astype(np.int64)
    mem = np.maximum(1, np.rint(_lognormal(rng, spec.memory_mean, spec.memory_sigma, n))).astype(np.int64)
    raw = _lognormal(rng, spec.bytes_mean, 1.0, len(pairs))
    if spec.target_ccr is not None:
        nbytes = _calibrate(raw, int(w.sum()), spec)
    else:
        nbytes = np.rint(raw).astype(np.int64)
    nodes = [OpNode(i, f"op_{i}", int(w[i]), int(mem[i])) for i in range(n)]
    edges = [TensorEdge(s, d, int(x)) for (s, d), x in zip(pairs, nbytes)]
    return ComputationGraph(nodes, edges)


def devices_for(graph: ComputationGraph, count: int, load: float = 0.75) -> list[DeviceSpec]:
    """Equal devices sized so the graph fills ``load`` of their aggregate memory."""
    cap = max(1, math.ceil(graph.total_memory / (count * load)))
    return [DeviceSpec(i, cap) for i in range(count)]


@dataclass(frozen=True)
class ProfileFamily:
    """Linear-plus-noise per-node costs in the batch size.

    ``measure`` mimics profiling: each of ``iterations`` runs perturbs the
    true value by Gaussian noise of relative size ``noise`` and the runs are
    averaged.
    """

    nodes: int = 500
    seed: int = 0
    noise: float = 0.05
    iterations: int = 5
    mem_slope_mean: float = 2.0e4  # bytes per sample
    mem_base_mean: float = 2.0e6  # batch-independent bytes (weights, workspace)
    time_slope_mean: float = 0.5  # us per sample
    time_base_mean: float = 20.0

    def _params(self):
        rng = np.random.default_rng([self.seed, 0])
        n = self.nodes
        return (
            _lognormal(rng, self.mem_slope_mean, 1.0, n),
            _lognormal(rng, self.mem_base_mean, 1.0, n),
            _lognormal(rng, self.time_slope_mean, 1.0, n),
            _lognormal(rng, self.time_base_mean, 0.5, n),
        )

    def truth(self, batch: int) -> dict[int, tuple[float, float]]:
        ms, mb, ts, tb = self._params()
        return {i: (float(ms[i] * batch + mb[i]), float(ts[i] * batch + tb[i])) for i in range(self.nodes)}

    def measure(self, batch: int, stream: int = 0) -> dict[int, tuple[int, int]]:
        """Averaged noisy measurement; ``stream`` selects an independent noise draw."""
        ms, mb, ts, tb = self._params()
        rng = np.random.default_rng([self.seed, 1, batch, stream])
        shape = (self.iterations, self.nodes)
        mem = ((ms * batch + mb) * (1 + self.noise * rng.standard_normal(shape))).mean(axis=0)
        tim = ((ts * batch + tb) * (1 + self.noise * rng.standard_normal(shape))).mean(axis=0)
        mem = np.maximum(0, np.rint(mem)).astype(np.int64)
        tim = np.maximum(1, np.rint(tim)).astype(np.int64)
        return {i: (int(mem[i]), int(tim[i])) for i in range(self.nodes)}

    def profiles(self, batch_sizes=(32, 64, 128)):
        from dagplace.estimation import BatchProfile, ProfileSet

        return ProfileSet(tuple(BatchProfile(b, self.measure(b)) for b in batch_sizes))

    def graph_at(self, batch: int, stream: int = 1) -> ComputationGraph:
        """Node-only graph holding a fresh measurement at ``batch``."""
        m = self.measure(batch, stream)
        return ComputationGraph([OpNode(i, f"op_{i}", m[i][1], m[i][0]) for i in range(self.nodes)], [])
