"""Core graph model: operation nodes, tensor edges, validation and level analysis.

All durations are integer microseconds and all sizes integer bytes.  Graphs are
immutable once built; adjacency indexes are computed lazily and cached.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

from dagplace.errors import (
    CycleDetected,
    DanglingEdge,
    DuplicateId,
    GraphError,
    NegativeValue,
    ParallelEdge,
    SelfLoop,
    ZeroComputeTime,
)


@dataclass(frozen=True)
class OpNode:
    id: int
    name: str
    compute_time: int
    memory: int
    colocation_group: str | None = None


@dataclass(frozen=True)
class TensorEdge:
    src: int
    dst: int
    tensor_bytes: int


@dataclass(frozen=True)
class CommModel:
    """Affine transfer cost ``t = k * bytes + b``."""

    k: float
    b: float

    def __post_init__(self):
        if self.k < 0 or self.b < 0:
            raise ValueError(f"comm model constants must be >= 0, got k={self.k}, b={self.b}")

    def time(self, nbytes: int) -> int:
        return comm_time(nbytes, self)


@dataclass(frozen=True)
class DeviceSpec:
    id: int
    memory_capacity: int

    def __post_init__(self):
        if self.memory_capacity <= 0:
            raise ValueError(f"device {self.id}: memory_capacity must be > 0")


class ComputationGraph:
    """A DAG of profiled operations.

    Construction does not validate; call :func:`validate` (or
    :meth:`check`) before relying on acyclicity.
    """

    def __init__(self, nodes: Iterable[OpNode], edges: Iterable[TensorEdge] = ()):
        self._nodes = tuple(nodes)
        self._edges = tuple(edges)

    @property
    def nodes(self) -> tuple[OpNode, ...]:
        return self._nodes

    @property
    def edges(self) -> tuple[TensorEdge, ...]:
        return self._edges

    def __len__(self):
        return len(self._nodes)

    def __eq__(self, other):
        if not isinstance(other, ComputationGraph):
            return NotImplemented
        return (
            sorted(self._nodes, key=lambda n: n.id) == sorted(other._nodes, key=lambda n: n.id)
            and sorted(self._edges, key=_edge_key) == sorted(other._edges, key=_edge_key)
        )

    def __hash__(self):
        return hash((len(self._nodes), len(self._edges)))

    def __repr__(self):
        return f"ComputationGraph(nodes={len(self._nodes)}, edges={len(self._edges)})"

    @cached_property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(sorted(n.id for n in self._nodes))

    @cached_property
    def node(self) -> dict[int, OpNode]:
        return {n.id: n for n in self._nodes}

    @cached_property
    def sorted_edges(self) -> tuple[TensorEdge, ...]:
        return tuple(sorted(self._edges, key=_edge_key))

    @cached_property
    def succ(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """Node id -> ((dst, tensor_bytes), ...) sorted by dst id."""
        out: dict[int, list] = {i: [] for i in self.node_ids}
        for e in self.sorted_edges:
            out[e.src].append((e.dst, e.tensor_bytes))
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def pred(self) -> dict[int, tuple[tuple[int, int], ...]]:
        """Node id -> ((src, tensor_bytes), ...) sorted by src id."""
        out: dict[int, list] = {i: [] for i in self.node_ids}
        for e in sorted(self._edges, key=lambda e: (e.dst, e.src)):
            out[e.dst].append((e.src, e.tensor_bytes))
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def edge_bytes(self) -> dict[tuple[int, int], int]:
        return {(e.src, e.dst): e.tensor_bytes for e in self._edges}

    @property
    def total_compute(self) -> int:
        return sum(n.compute_time for n in self._nodes)

    @property
    def total_memory(self) -> int:
        return sum(n.memory for n in self._nodes)

    def sources(self) -> list[int]:
        return [i for i in self.node_ids if not self.pred[i]]

    def sinks(self) -> list[int]:
        return [i for i in self.node_ids if not self.succ[i]]

    def check(self) -> "ComputationGraph":
        """Raise the first validation error, if any; returns self for chaining."""
        validate(self).raise_if_invalid()
        return self


def _edge_key(e: TensorEdge):
    return (e.src, e.dst, e.tensor_bytes)


@dataclass
class ValidationResult:
    errors: list[GraphError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self):
        return self.ok

    def raise_if_invalid(self):
        if self.errors:
            raise self.errors[0]


def validate(graph: ComputationGraph) -> ValidationResult:
    """Collect every structural violation of ``graph``."""
    result = ValidationResult()
    seen: set[int] = set()
    for n in graph.nodes:
        if n.id in seen:
            result.errors.append(DuplicateId(n.id))
        seen.add(n.id)
        if n.compute_time < 0:
            result.errors.append(NegativeValue(f"node {n.id} compute_time", n.compute_time))
        if n.memory < 0:
            result.errors.append(NegativeValue(f"node {n.id} memory", n.memory))

    pairs: set[tuple[int, int]] = set()
    adj: dict[int, list[int]] = {i: [] for i in seen}
    for e in graph.edges:
        if e.src == e.dst:
            result.errors.append(SelfLoop(e.src))
            continue
        if (e.src, e.dst) in pairs:
            result.errors.append(ParallelEdge(e.src, e.dst))
            continue
        pairs.add((e.src, e.dst))
        if e.tensor_bytes < 0:
            result.errors.append(NegativeValue(f"edge ({e.src}, {e.dst}) tensor_bytes", e.tensor_bytes))
        missing = [x for x in (e.src, e.dst) if x not in seen]
        if missing:
            result.errors.append(DanglingEdge(e.src, e.dst, missing[0]))
            continue
        adj[e.src].append(e.dst)

    cycle = find_cycle(adj)
    if cycle is not None:
        result.errors.append(CycleDetected(cycle))
    return result


def find_cycle(adj: Mapping[int, list[int]]) -> list[int] | None:
    """Iterative three-colour DFS. Returns one cycle's node sequence or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v: WHITE for v in adj}
    parent: dict[int, int] = {}
    for root in sorted(adj):
        if color[root] != WHITE:
            continue
        color[root] = GREY
        stack = [(root, iter(sorted(adj[root])))]
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = BLACK
                stack.pop()
                continue
            if color[nxt] == WHITE:
                color[nxt] = GREY
                parent[nxt] = v
                stack.append((nxt, iter(sorted(adj[nxt]))))
            elif color[nxt] == GREY:
                cycle = [v]
                while cycle[-1] != nxt:
                    cycle.append(parent[cycle[-1]])
                cycle.reverse()
                return cycle
    return None


def comm_time(nbytes: int, model: CommModel) -> int:
    """Transfer time in whole microseconds, rounded half-up."""
    if nbytes < 0:
        raise ValueError(f"byte count must be >= 0, got {nbytes}")
    return int(math.floor(model.k * nbytes + model.b + 0.5))


def ccr(graph: ComputationGraph, model: CommModel) -> float:
    """Communication-to-computation ratio: total edge time over total node time."""
    total_w = graph.total_compute
    if total_w <= 0:
        raise ZeroComputeTime("graph has zero total compute time")
    total_c = sum(comm_time(e.tensor_bytes, model) for e in graph.edges)
    return total_c / total_w


def kahn_order(graph: ComputationGraph) -> list[int]:
    """Plain FIFO topological order (ascending id tie-break)."""
    indeg = {i: len(graph.pred[i]) for i in graph.node_ids}
    queue = deque(i for i in graph.node_ids if indeg[i] == 0)
    order = []
    while queue:
        v = queue.popleft()
        order.append(v)
        for s, _ in graph.succ[v]:
            indeg[s] -= 1
            if indeg[s] == 0:
                queue.append(s)
    if len(order) != len(graph.node_ids):
        adj = {i: [s for s, _ in graph.succ[i]] for i in graph.node_ids}
        raise CycleDetected(find_cycle(adj) or [])
    return order


@dataclass(frozen=True)
class LevelTable:
    tlevel: dict[int, int]
    blevel: dict[int, int]
    cpath: dict[int, int]

    @property
    def max_cpath(self) -> int:
        return max(self.cpath.values(), default=0)


def compute_levels(graph: ComputationGraph, model: CommModel) -> LevelTable:
    """Longest-path levels for every node, computed over a topological order.

    ``tlevel`` excludes the node's own compute time, ``blevel`` includes it;
    every edge pays its full transfer time regardless of placement.
    """
    order = kahn_order(graph)
    w = {n.id: n.compute_time for n in graph.nodes}
    tlevel: dict[int, int] = {}
    for v in order:
        best = 0
        for p, nbytes in graph.pred[v]:
            cand = tlevel[p] + w[p] + comm_time(nbytes, model)
            if cand > best:
                best = cand
        tlevel[v] = best
    blevel: dict[int, int] = {}
    for v in reversed(order):
        best = 0
        for s, nbytes in graph.succ[v]:
            cand = blevel[s] + comm_time(nbytes, model)
            if cand > best:
                best = cand
        blevel[v] = best + w[v]
    cpath = {v: tlevel[v] + blevel[v] for v in graph.node_ids}
    tlevel = {v: tlevel[v] for v in graph.node_ids}
    blevel = {v: blevel[v] for v in graph.node_ids}
    return LevelTable(tlevel=tlevel, blevel=blevel, cpath=cpath)
