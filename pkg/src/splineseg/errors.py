"""Exception hierarchy shared across the package."""


class SplinesegError(Exception):
    """Base class for all package-specific failures."""


class DuplicateConsecutivePoints(SplinesegError):
    """Two consecutive control points coincide, so the knot interval is zero."""


class TopologyError(SplinesegError):
    """Operation is not defined for this contour topology."""


class ParameterOutOfRange(SplinesegError):
    """Curve parameter lies outside the segment's knot interval."""


class DegenerateShape(SplinesegError):
    """All points coincide; the shape has no extent to normalize."""


class SingularSystem(SplinesegError):
    """The alignment normal equations are rank-deficient."""


class NonConvergence(SplinesegError):
    """Iterative procedure did not converge within the iteration budget."""

    def __init__(self, message, last_delta=None):
        super().__init__(message)
        self.last_delta = last_delta


class InsufficientData(SplinesegError):
    """Too few training shapes."""


class EigenFailure(SplinesegError):
    """Eigensolver failed to converge."""


class DimensionMismatch(SplinesegError):
    """Vector or grid dimensions do not agree."""


class KernelTooLarge(SplinesegError):
    """Filter kernel exceeds the image dimensions."""


class Divergence(SplinesegError):
    """Field energy increased on consecutive iterations (step size too big)."""


class TooManyLevels(SplinesegError):
    """Pyramid would shrink a level below the minimum usable size."""


class ScheduleMismatch(SplinesegError):
    """Pyramid schedule is incompatible with the image dimensions."""


class OpenContour(SplinesegError):
    """A closed contour is required (e.g. for rasterization)."""


class NoActions(SplinesegError):
    """Edit session holds no move events."""


class ZeroEffort(SplinesegError):
    """Efficiency is undefined when effort is zero."""
