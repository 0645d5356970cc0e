"""Exception types shared across the package."""


class TvpropError(Exception):
    """Base class for all tvprop errors."""


class GraphValidationError(TvpropError):
    """Base class for graph construction problems."""


class SelfLoop(GraphValidationError):
    pass


class NonPositiveWeight(GraphValidationError):
    pass


class DuplicateEdge(GraphValidationError):
    pass


class NodeOutOfRange(TvpropError):
    pass


class DimensionMismatch(TvpropError):
    pass


class PartitionMismatch(TvpropError):
    pass


class CoefficientCountMismatch(TvpropError):
    pass


class ZeroReference(TvpropError):
    pass


class IsolatedNode(TvpropError):
    pass


class DisconnectedGraph(TvpropError):
    pass


class EmptySamplingSet(TvpropError):
    pass


class NonFiniteIterate(TvpropError):
    pass


class NotResolved(TvpropError):
    pass


class DegenerateEdgeSet(TvpropError):
    pass


class InvalidSpec(TvpropError):
    pass


class ConnectivityRetryExhausted(TvpropError):
    pass


class EmptyRegion(TvpropError):
    pass


class DegenerateImage(TvpropError):
    pass


class FileFormatError(TvpropError):
    """Malformed input file.  Carries the offending line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
