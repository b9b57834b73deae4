"""Exception types shared across the package."""


class EmompcError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(EmompcError, ValueError):
    """Operands have incompatible shapes."""


class EmptySetError(EmompcError, ValueError):
    """An operation that requires a nonempty set received an empty one."""


class EvaluationError(EmompcError):
    """A user callback returned a non-finite value.

    Carries the offending decision vector so failed subproblems can be
    reproduced.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = None if point is None else list(point)


class DivergenceError(EvaluationError):
    """State rollout produced a non-finite state; ``step`` is the knot index."""

    def __init__(self, message, step, point=None):
        super().__init__(message, point)
        self.step = step


class DegenerateFrontError(EmompcError, ValueError):
    """The two scalar minimizers do not span a trade-off."""


class FrontTraceError(EmompcError, RuntimeError):
    """A scalar subproblem of the front tracer failed to converge."""


class SingularProjectionError(EmompcError, ValueError):
    """Point projects ambiguously onto the track (e.g. the arc center)."""


class TrackFormatError(EmompcError, ValueError):
    """A track file is malformed."""


class LibraryFormatError(EmompcError, ValueError):
    """A persisted library failed version or checksum validation."""


class ScanError(EmompcError, RuntimeError):
    """The symmetry scanner could not trace one of its fronts."""
