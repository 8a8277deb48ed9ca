"""Exception hierarchy shared by every stage of the placement pipeline."""


class DagPlaceError(Exception):
    """Base class for all errors raised by dagplace."""


class GraphError(DagPlaceError):
    """The computation graph violates a structural invariant."""


class CycleDetected(GraphError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"cycle detected: {' -> '.join(map(str, self.cycle))}")


class DanglingEdge(GraphError):
    def __init__(self, src, dst, missing):
        self.edge = (src, dst)
        self.missing = missing
        super().__init__(f"edge ({src}, {dst}) references unknown node {missing}")


class DuplicateId(GraphError):
    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"duplicate node id {node_id}")


class ParallelEdge(GraphError):
    def __init__(self, src, dst):
        self.edge = (src, dst)
        super().__init__(f"parallel edge ({src}, {dst}); aggregate tensor bytes first")


class SelfLoop(GraphError):
    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"self loop on node {node_id}")


class NegativeValue(GraphError):
    def __init__(self, where, value):
        self.where = where
        self.value = value
        super().__init__(f"{where} must be >= 0, got {value}")


class ZeroComputeTime(DagPlaceError):
    """CCR is undefined when the graph has no compute time at all."""


class SchemaError(DagPlaceError):
    """An input document does not match the expected JSON schema."""


class NoSuchEdge(DagPlaceError):
    pass


class NodeExceedsClusterLimit(DagPlaceError):
    def __init__(self, node_id, memory, limit):
        self.node_id = node_id
        super().__init__(f"node {node_id} needs {memory} bytes, cluster limit is {limit}")


class GroupExceedsClusterLimit(DagPlaceError):
    def __init__(self, group, memory, limit):
        self.group = group
        super().__init__(
            f"co-location group {group!r} needs {memory} bytes, cluster limit is {limit}"
        )


class ColocationCycle(GraphError):
    def __init__(self, group):
        self.group = group
        super().__init__(f"contracting co-location group {group!r} creates a cycle")


class InfeasiblePartition(DagPlaceError):
    pass


class InvalidClusterMap(DagPlaceError):
    pass


class InsufficientSamples(DagPlaceError):
    pass


class UnknownNode(DagPlaceError):
    pass


class NodeUniverseMismatch(DagPlaceError):
    pass


class UnplacedNode(DagPlaceError):
    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"node {node_id} has no device assignment")


class InstanceTooLarge(DagPlaceError):
    pass


class NoFeasiblePlacement(DagPlaceError):
    pass


class UnreachableTargetCCR(DagPlaceError):
    pass
