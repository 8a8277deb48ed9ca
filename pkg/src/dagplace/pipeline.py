"""End-to-end placement: estimate, fuse, place, expand and simulate."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from dagplace.estimation import (
    ProfileSet,
    estimate_graph,
    fit_node_models,
    sequential_eval_placement,
)
from dagplace.fusion import DEFAULT_MEM_FRACTION, DEFAULT_RANGE, ClusterMap, FusionConfig, fuse
from dagplace.graph import CommModel, ComputationGraph, DeviceSpec, ccr, compute_levels, validate
from dagplace.ordering import cpd_topo
from dagplace.placement import (
    Placement,
    adjusting_placement,
    expand_placement,
    identity_clusters,
    order_place,
)
from dagplace.simulator import simulate

STRATEGIES = ("order", "adjust", "sequential-eval")


@dataclass(frozen=True)
class PipelineConfig:
    strategy: str = "adjust"
    exploration_range: int = DEFAULT_RANGE
    cluster_mem_fraction: float = DEFAULT_MEM_FRACTION
    target_batch: int | None = None
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if not 0 < self.cluster_mem_fraction:
            raise ValueError("cluster_mem_fraction must be > 0")


def cluster_memory_limit(devices: list[DeviceSpec], fraction: float) -> int:
    """Per-cluster cap as a fraction of the smallest device's memory."""
    return max(1, int(fraction * min(d.memory_capacity for d in devices)))


@dataclass
class PlacementResult:
    placement: Placement  # over the original graph
    coarse: ComputationGraph
    clusters: ClusterMap
    coarse_placement: Placement


def place_graph(
    graph: ComputationGraph,
    devices: list[DeviceSpec],
    model: CommModel,
    strategy: str = "adjust",
    exploration_range: int = DEFAULT_RANGE,
    cluster_mem_fraction: float = DEFAULT_MEM_FRACTION,
    fused: bool = True,
) -> PlacementResult:
    """Produce a placement of ``graph`` with the chosen strategy.

    ``order`` and ``adjust`` run on the fused graph (unless ``fused`` is off)
    and are expanded back; ``sequential-eval`` fills devices along DFS-TOPO on
    the graph itself.
    """
    if strategy == "sequential-eval":
        p = sequential_eval_placement(graph, devices)
        return PlacementResult(p, graph, identity_clusters(graph), p)
    if fused:
        config = FusionConfig(exploration_range, cluster_memory_limit(devices, cluster_mem_fraction))
        coarse, cmap = fuse(graph, model, config)
    else:
        validate(graph).raise_if_invalid()
        coarse, cmap = graph, identity_clusters(graph)
    order = cpd_topo(coarse, compute_levels(coarse, model))
    if strategy == "order":
        cp = order_place(coarse, order, devices)
    elif strategy == "adjust":
        cp = adjusting_placement(coarse, order, devices, model)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return PlacementResult(expand_placement(cmap, cp, graph), coarse, cmap, cp)


@dataclass
class PipelineReport:
    nodes_before: int
    nodes_after: int
    edges_before: int
    edges_after: int
    ccr_before: float
    ccr_after: float
    cut_cost: int
    makespan: dict[str, int]
    oom_risk: dict[str, bool]
    devices_used: dict[str, int]
    coarse_makespan: dict[str, int] = field(default_factory=dict)
    placement_seconds: float = 0.0
    estimation: dict | None = None
    placements: dict[str, Placement] = field(default_factory=dict, repr=False)
    estimated_graph: ComputationGraph | None = field(default=None, repr=False)

    @property
    def node_reduction(self) -> float:
        return self.nodes_before / max(1, self.nodes_after)

    @property
    def ccr_reduction(self) -> float:
        return self.ccr_before / self.ccr_after if self.ccr_after > 0 else float("inf")

    def to_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "schema_version": 1,
            "nodes_before": self.nodes_before,
            "nodes_after": self.nodes_after,
            "edges_before": self.edges_before,
            "edges_after": self.edges_after,
            "node_reduction": round(self.node_reduction, 6),
            "ccr_before": round(self.ccr_before, 6),
            "ccr_after": round(self.ccr_after, 6),
            "ccr_reduction": None if self.ccr_after <= 0 else round(self.ccr_reduction, 6),
            "cut_cost": self.cut_cost,
            "makespan": dict(self.makespan),
            "coarse_makespan": dict(self.coarse_makespan),
            "oom_risk": dict(self.oom_risk),
            "devices_used": dict(self.devices_used),
        }
        if self.estimation is not None:
            doc["estimation"] = self.estimation
        if include_timing:
            doc["placement_seconds"] = self.placement_seconds
        return doc


def evaluate_pipeline(
    graph: ComputationGraph,
    devices: list[DeviceSpec],
    model: CommModel,
    config: PipelineConfig = PipelineConfig(),
    profiles: ProfileSet | None = None,
    base_batch: int | None = None,
    edge_overrides: dict | None = None,
) -> PipelineReport:
    estimation = None
    if profiles is not None:
        if config.target_batch is None:
            raise ValueError("target_batch is required when profiles are given")
        models = fit_node_models(profiles)
        graph = estimate_graph(graph, models, config.target_batch, base_batch, edge_overrides)
        estimation = models.diagnostics()
        estimation["target_batch"] = config.target_batch
        estimation["edge_scaling"] = "linear in batch size (assumed)"
    validate(graph).raise_if_invalid()

    start = time.perf_counter()
    limit = cluster_memory_limit(devices, config.cluster_mem_fraction)
    coarse, cmap = fuse(graph, model, FusionConfig(config.exploration_range, limit))
    order = cpd_topo(coarse, compute_levels(coarse, model))
    coarse_adjust = adjusting_placement(coarse, order, devices, model)
    elapsed = time.perf_counter() - start
    coarse_order = order_place(coarse, order, devices)

    placements = {
        "order": expand_placement(cmap, coarse_order, graph),
        "adjust": expand_placement(cmap, coarse_adjust, graph),
        "sequential-eval": sequential_eval_placement(graph, devices),
    }
    makespan = {}
    oom = {}
    for name, p in placements.items():
        rep = simulate(graph, p, devices, model)
        makespan[name] = rep.makespan
        oom[name] = rep.oom_flag
    coarse_makespan = {
        "order": simulate(coarse, coarse_order, devices, model).makespan,
        "adjust": simulate(coarse, coarse_adjust, devices, model).makespan,
    }
    return PipelineReport(
        nodes_before=len(graph),
        nodes_after=len(coarse),
        edges_before=len(graph.edges),
        edges_after=len(coarse.edges),
        ccr_before=ccr(graph, model),
        ccr_after=ccr(coarse, model),
        cut_cost=cmap.cut_cost,
        makespan=makespan,
        coarse_makespan=coarse_makespan,
        oom_risk=oom,
        devices_used={k: p.devices_used() for k, p in placements.items()},
        placement_seconds=elapsed,
        estimation=estimation,
        placements=placements,
        estimated_graph=graph if profiles is not None else None,
    )
