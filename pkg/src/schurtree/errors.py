"""Exception taxonomy shared by all modules.

Every error raised on a contract violation subclasses SchurTreeError so callers
can catch the library's failures with a single except clause. The CLI maps a
few of these to distinct process exit codes.
"""


class SchurTreeError(Exception):
    """Base class for all library errors."""


class NonPositiveWeight(SchurTreeError):
    """An edge weight is zero, negative, or not finite."""


class SelfLoopInput(SchurTreeError):
    """An input edge joins a vertex to itself."""


class EmptyInput(SchurTreeError):
    """The edge list is empty."""


class UnknownEdge(SchurTreeError):
    """An edge id does not exist in the graph."""


class TooFewVertices(SchurTreeError):
    """The operation needs more vertices than the graph has."""


class Disconnected(SchurTreeError):
    """The graph (or a required block of it) is not connected."""


class SameVertex(SchurTreeError):
    """An operation on a vertex pair received the same vertex twice."""


class SingularBlock(SchurTreeError):
    """The eliminated block of a Schur complement is singular."""


class TooLarge(SchurTreeError):
    """Input exceeds the guard limits of an exhaustive oracle."""


class NullSpaceMismatch(SchurTreeError):
    """Two Laplacians do not share the all-ones null space structure."""


class StepBudgetExceeded(SchurTreeError):
    """A random-walk step budget was exhausted."""


class NotOrthogonal(SchurTreeError):
    """A right-hand side is not orthogonal to the all-ones vector."""


class IsolatedVertex(SchurTreeError):
    """The vertex has no incident edges."""


class EmptyKeep(SchurTreeError):
    """The keep set of a partial elimination is empty or is the whole
    vertex set where a proper subset is required."""


class LevelOutOfRange(SchurTreeError):
    """A recursion level is outside the schedule's valid range."""


class DeadEdge(SchurTreeError):
    """The edge was already contracted away or deleted."""


class UndersampledCell(SchurTreeError):
    """A goodness-of-fit cell has too small an expected count."""


class BadPair(SchurTreeError):
    """A query pair references a missing vertex or repeats a vertex."""


class GraphFileError(SchurTreeError):
    """A graph/pair/keep file could not be parsed."""


class InternalError(SchurTreeError):
    """An internal consistency check failed; with randomized approximation
    this usually means the per-call failure budget was exceeded."""
