class CPhaseError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(CPhaseError, ValueError):
    pass


class DegeneratePostSelectionError(CPhaseError):
    """The post-selected output has zero probability."""


class InversionError(CPhaseError):
    """A linear inversion is degenerate (zero counts, rank-deficient inputs)."""


class ConvergenceError(CPhaseError):
    """The optimizer hit its iteration cap; ``best`` carries the best-so-far result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
