"""Exception hierarchy shared by all bentguide modules."""


class BentGuideError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BentGuideError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NoNullSpaceError(BentGuideError):
    """The corner jump operator is not singular at the requested energy."""


class CornerSingularityError(BentGuideError):
    """A point is too close to a corner where the map degenerates."""


class MapInversionError(BentGuideError):
    """Newton inversion of the conformal map did not converge.

    ``index`` holds the offending position when a batch was inverted.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NoAdmissibleRootError(BentGuideError):
    """No root of the quantization cubic satisfies the branch condition."""


class GridTooCoarseError(BentGuideError):
    """Discretization is too coarse for the requested accuracy."""


class ConvergenceError(BentGuideError):
    """An iterative eigensolver stopped before reaching its tolerance."""
