"""Operation fusion: coarsen a graph by cutting a topological order into clusters.

Merging only positions that are contiguous in a topological order can never
close a loop, so every coarse graph built here is a DAG.  Cut positions are
chosen by a dynamic program that minimises the communication crossing cluster
boundaries, subject to a window length and a per-cluster memory cap.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from dagplace import _kernels
from dagplace.errors import (
    ColocationCycle,
    GroupExceedsClusterLimit,
    InfeasiblePartition,
    InvalidClusterMap,
    NodeExceedsClusterLimit,
    NoSuchEdge,
)
from dagplace.graph import (
    CommModel,
    ComputationGraph,
    OpNode,
    TensorEdge,
    comm_time,
    compute_levels,
    find_cycle,
    validate,
)
from dagplace.ordering import TopoOrder, cpd_topo

DEFAULT_RANGE = 200
DEFAULT_MEM_FRACTION = 0.25


@dataclass(frozen=True)
class FusionConfig:
    exploration_range: int = DEFAULT_RANGE
    cluster_memory_limit: int | None = None  # bytes; None means unlimited

    def __post_init__(self):
        if self.exploration_range < 1:
            raise ValueError("exploration_range must be >= 1")
        if self.cluster_memory_limit is not None and self.cluster_memory_limit <= 0:
            raise ValueError("cluster_memory_limit must be > 0")


@dataclass(frozen=True)
class Cluster:
    id: int
    members: tuple[int, ...]
    total_compute: int
    total_memory: int


@dataclass(frozen=True)
class ClusterMap:
    """Partition of a graph's nodes into clusters cut from a unit sequence.

    ``sequence`` lists fusion units in order; a unit is a node or a contracted
    co-location group whose original members are ``unit_members[unit]``.
    ``breakpoints`` are the interior positions of ``sequence`` where a new
    cluster starts.
    """

    clusters: tuple[Cluster, ...]
    node_to_cluster: dict[int, int]
    breakpoints: tuple[int, ...]
    sequence: tuple[int, ...]
    unit_members: dict[int, tuple[int, ...]] = field(default_factory=dict)
    cut_cost: int = 0

    def members_of_unit(self, unit: int) -> tuple[int, ...]:
        return self.unit_members.get(unit, (unit,))

    def check(self):
        """Raise InvalidClusterMap unless cutting ``sequence`` yields ``clusters``."""
        bounds = [0, *self.breakpoints, len(self.sequence)]
        if any(a >= b for a, b in zip(bounds, bounds[1:])) and self.sequence:
            raise InvalidClusterMap("breakpoints must be strictly ascending interior positions")
        if len(bounds) - 1 != len(self.clusters) and self.sequence:
            raise InvalidClusterMap("breakpoint count does not match cluster count")
        for c, (a, b) in zip(self.clusters, zip(bounds, bounds[1:])):
            expected = tuple(m for u in self.sequence[a:b] for m in self.members_of_unit(u))
            if expected != c.members:
                raise InvalidClusterMap(f"cluster {c.id} members do not match sequence slice [{a}, {b})")
            if any(self.node_to_cluster.get(m) != c.id for m in c.members):
                raise InvalidClusterMap(f"node_to_cluster disagrees with cluster {c.id}")
        if len(self.node_to_cluster) != sum(len(c.members) for c in self.clusters):
            raise InvalidClusterMap("node_to_cluster has nodes outside every cluster")


def merge_is_safe(graph: ComputationGraph, u: int, v: int) -> bool:
    """True iff merging the endpoints of edge (u, v) cannot create a loop,
    i.e. no path u -> v exists besides the edge itself."""
    if (u, v) not in graph.edge_bytes:
        raise NoSuchEdge(f"no edge ({u}, {v})")
    seen = {u}
    queue = deque(s for s, _ in graph.succ[u] if s != v)
    seen.update(queue)
    while queue:
        x = queue.popleft()
        if x == v:
            return False
        for s, _ in graph.succ[x]:
            if s not in seen:
                seen.add(s)
                queue.append(s)
    return True


def _limit(config: FusionConfig, graph: ComputationGraph) -> int:
    if config.cluster_memory_limit is None:
        return graph.total_memory + 1
    return config.cluster_memory_limit


def partition_edges(graph: ComputationGraph, order: TopoOrder, model: CommModel):
    """Flatten the graph along ``order`` into the arrays the DP kernel consumes."""
    pos = order.positions()
    n = len(order.sequence)
    if n != len(graph.node_ids) or any(v not in pos for v in graph.node_ids):
        raise InvalidClusterMap("order is not a permutation of the graph's nodes")
    mem = [graph.node[v].memory for v in order.sequence]
    out_cost = [0] * n
    incoming: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e in graph.sorted_edges:
        pu, pv = pos[e.src], pos[e.dst]
        if pu >= pv:
            raise InvalidClusterMap(f"edge ({e.src}, {e.dst}) points backwards in the order")
        c = comm_time(e.tensor_bytes, model)
        out_cost[pu] += c
        incoming[pv].append((pu, c))
    in_ptr = [0]
    in_src: list[int] = []
    in_cost: list[int] = []
    for lst in incoming:
        for pu, c in lst:
            in_src.append(pu)
            in_cost.append(c)
        in_ptr.append(len(in_src))
    return mem, out_cost, in_ptr, in_src, in_cost


def optimal_breakpoints(
    graph: ComputationGraph, order: TopoOrder, model: CommModel, config: FusionConfig
) -> ClusterMap:
    """Cut ``order`` into clusters of minimal total inter-cluster communication.

    A cluster spans at most ``exploration_range`` positions and at most
    ``cluster_memory_limit`` bytes.  Ties prefer the longer last cluster.
    """
    limit = _limit(config, graph)
    for v in order.sequence:
        if graph.node[v].memory > limit:
            raise NodeExceedsClusterLimit(v, graph.node[v].memory, limit)
    mem, out_cost, in_ptr, in_src, in_cost = partition_edges(graph, order, model)
    n = len(mem)
    if n == 0:
        return ClusterMap((), {}, (), ())
    S, P = _kernels.breakpoint_dp(mem, out_cost, in_ptr, in_src, in_cost, config.exploration_range, limit)
    starts = []
    k = n
    while k > 0:
        i = P[k]
        if i < 0:
            raise InfeasiblePartition(f"no admissible cluster ends at position {k}")
        starts.append(i)
        k = i
    starts.reverse()
    return _cluster_map(graph, order.sequence, starts, {}, S[n])


def _cluster_map(graph, sequence, starts, unit_members, cut_cost, members_graph=None) -> ClusterMap:
    """Assemble clusters from cluster start positions over ``sequence``."""
    lookup = (members_graph or graph).node
    bounds = [*starts, len(sequence)]
    clusters = []
    node_to_cluster = {}
    for cid, (a, b) in enumerate(zip(bounds, bounds[1:])):
        members = tuple(m for u in sequence[a:b] for m in unit_members.get(u, (u,)))
        for m in members:
            node_to_cluster[m] = cid
        clusters.append(
            Cluster(
                id=cid,
                members=members,
                total_compute=sum(lookup[m].compute_time for m in members),
                total_memory=sum(lookup[m].memory for m in members),
            )
        )
    return ClusterMap(
        clusters=tuple(clusters),
        node_to_cluster=node_to_cluster,
        breakpoints=tuple(starts[1:]),
        sequence=tuple(sequence),
        unit_members=dict(unit_members),
        cut_cost=int(cut_cost),
    )


def cut_cost(graph: ComputationGraph, node_to_cluster: dict[int, int], model: CommModel) -> int:
    """Total transfer time over edges whose endpoints sit in different clusters."""
    return sum(
        comm_time(e.tensor_bytes, model)
        for e in graph.edges
        if node_to_cluster[e.src] != node_to_cluster[e.dst]
    )


def build_coarse_graph(
    graph: ComputationGraph,
    order: TopoOrder | None,
    clusters: ClusterMap,
    model: CommModel | None = None,
) -> ComputationGraph:
    """Collapse each cluster to one node; crossing edges are merged by byte sum."""
    n2c = clusters.node_to_cluster
    missing = [v for v in graph.node_ids if v not in n2c]
    if missing or len(n2c) != len(graph.node_ids):
        raise InvalidClusterMap(f"cluster map does not cover the graph (missing {missing[:5]})")
    if order is not None and set(order.sequence) == set(graph.node_ids):
        pos = order.positions()
        for c in clusters.clusters:
            ps = sorted(pos[m] for m in c.members)
            if ps[-1] - ps[0] + 1 != len(ps):
                raise InvalidClusterMap(f"cluster {c.id} is not contiguous in the order")

    nodes = [
        OpNode(
            id=c.id,
            name=f"cluster_{c.id}",
            compute_time=c.total_compute,
            memory=c.total_memory,
        )
        for c in clusters.clusters
    ]
    crossing: dict[tuple[int, int], int] = {}
    for e in graph.sorted_edges:
        a, b = n2c[e.src], n2c[e.dst]
        if a != b:
            crossing[(a, b)] = crossing.get((a, b), 0) + e.tensor_bytes
    edges = [TensorEdge(a, b, nbytes) for (a, b), nbytes in sorted(crossing.items())]
    coarse = ComputationGraph(nodes, edges)
    result = validate(coarse)
    if not result.ok:
        raise InvalidClusterMap(f"coarse graph is invalid: {result.errors[0]}")
    return coarse


def contract_colocation(graph: ComputationGraph) -> tuple[ComputationGraph, dict[int, tuple[int, ...]]]:
    """Contract every co-location group into one super-node (id = smallest member id).

    Returns the contracted graph and ``unit -> original members`` for groups.
    """
    groups: dict[str, list[int]] = {}
    for v in graph.node_ids:
        g = graph.node[v].colocation_group
        if g is not None:
            groups.setdefault(g, []).append(v)
    if not groups:
        return graph, {}
    rep: dict[int, int] = {v: v for v in graph.node_ids}
    unit_members: dict[int, tuple[int, ...]] = {}
    unit_group: dict[int, str] = {}
    for g, members in groups.items():
        head = members[0]
        for m in members:
            rep[m] = head
        unit_members[head] = tuple(members)
        unit_group[head] = g

    nodes = []
    for v in graph.node_ids:
        if rep[v] != v:
            continue
        if v in unit_members:
            ms = unit_members[v]
            nodes.append(
                OpNode(
                    id=v,
                    name=f"group:{unit_group[v]}",
                    compute_time=sum(graph.node[m].compute_time for m in ms),
                    memory=sum(graph.node[m].memory for m in ms),
                    colocation_group=unit_group[v],
                )
            )
        else:
            nodes.append(graph.node[v])
    merged: dict[tuple[int, int], int] = {}
    for e in graph.sorted_edges:
        a, b = rep[e.src], rep[e.dst]
        if a != b:
            merged[(a, b)] = merged.get((a, b), 0) + e.tensor_bytes
    contracted = ComputationGraph(nodes, [TensorEdge(a, b, x) for (a, b), x in sorted(merged.items())])
    adj = {v.id: [] for v in nodes}
    for a, b in merged:
        adj[a].append(b)
    cycle = find_cycle(adj)
    if cycle is not None:
        bad = next((unit_group[u] for u in cycle if u in unit_group), None)
        raise ColocationCycle(bad)
    return contracted, unit_members


def fuse(
    graph: ComputationGraph, model: CommModel, config: FusionConfig
) -> tuple[ComputationGraph, ClusterMap]:
    """Contract co-location groups, order by CPD-TOPO, cut optimally, build the coarse graph."""
    validate(graph).raise_if_invalid()
    units, unit_members = contract_colocation(graph)
    limit = _limit(config, graph)
    for u, members in unit_members.items():
        total = units.node[u].memory
        if total > limit:
            raise GroupExceedsClusterLimit(units.node[u].colocation_group, total, limit)
    levels = compute_levels(units, model)
    order = cpd_topo(units, levels)
    unit_map = optimal_breakpoints(units, order, model, config)
    starts = [0, *unit_map.breakpoints] if order.sequence else []
    cmap = _cluster_map(units, order.sequence, starts, unit_members, unit_map.cut_cost, members_graph=graph)
    coarse = build_coarse_graph(graph, None, cmap, model)
    return coarse, cmap
