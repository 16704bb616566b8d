"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers (and the CLI) can map
them to a distinct exit code from runtime failures.
"""


class MorphInputError(ValueError):
    pass


class GraphError(MorphInputError):
    pass


class DisconnectedGraphError(GraphError):
    def __init__(self, i, j):
        super().__init__(f"graph is disconnected: no path between node {i} and node {j}")
        self.pair = (i, j)


class DegenerateDrawingError(MorphInputError):
    pass


class SizeMismatchError(MorphInputError):
    pass


class MetricUndefinedError(MorphInputError):
    pass


class AlreadyAtTargetError(MorphInputError):
    pass


class JitterExhaustedError(RuntimeError):
    """The jitter loop hit its attempt cap without producing a proposal."""


class StateMismatchError(RuntimeError):
    pass
