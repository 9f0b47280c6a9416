"""Exception hierarchy shared by all modules."""


class UIEError(Exception):
    """Base class for errors raised by uiesampler."""


class InvalidArgumentError(UIEError, ValueError):
    """An argument violates a documented precondition."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NoConvergenceError(UIEError, RuntimeError):
    """An iterative procedure hit its iteration or size cap."""


class DegeneracyError(UIEError, ArithmeticError):
    """A numerical quantity that must be nonzero vanished (breakdown)."""


class UnboundedWeightError(UIEError):
    """The weight does not decay fast enough to choose a truncation interval."""


class IllConditionedError(UIEError):
    """A constructed basis failed its orthonormality check."""


class MultiIntervalSupportError(UIEError):
    """The equilibrium measure is not supported on a single interval."""


class DegenerateEdgeError(UIEError):
    """The equilibrium density does not have a square-root edge."""
