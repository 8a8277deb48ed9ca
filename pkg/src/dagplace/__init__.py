"""Memory-aware placement of computation graphs across devices.

The pipeline orders a graph topologically, fuses contiguous runs of the order
into clusters, places the coarse graph on devices and simulates the result.
"""
from dagplace.errors import DagPlaceError
from dagplace.fusion import FusionConfig, fuse
from dagplace.graph import CommModel, ComputationGraph, DeviceSpec, OpNode, TensorEdge, ccr, comm_time, validate
from dagplace.ordering import Policy, cpd_topo, dfs_topo, m_topo
from dagplace.pipeline import PipelineConfig, evaluate_pipeline, place_graph
from dagplace.placement import Placement, adjusting_placement, order_place
from dagplace.simulator import simulate

__version__ = "0.1.0"

__all__ = [
    "CommModel",
    "ComputationGraph",
    "DagPlaceError",
    "DeviceSpec",
    "FusionConfig",
    "OpNode",
    "PipelineConfig",
    "Placement",
    "Policy",
    "TensorEdge",
    "adjusting_placement",
    "ccr",
    "comm_time",
    "cpd_topo",
    "dfs_topo",
    "evaluate_pipeline",
    "fuse",
    "m_topo",
    "order_place",
    "place_graph",
    "simulate",
    "validate",
]
