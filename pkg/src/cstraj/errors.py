"""Exceptions and warnings raised by cstraj."""


class CstrajError(Exception):
    """Base class for all numerical failures in this package."""


class NonFiniteError(CstrajError):
    """A trajectory coordinate overflowed or became NaN."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NoConvergence(CstrajError):
    """An iterative procedure hit its iteration cap or stalled.

    ``best`` holds whatever diagnostics the failing routine had at hand
    (for the root search: the best guess and its distance).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best or {}


class CausticError(CstrajError):
    """The mixed second derivative of the action vanished."""


class DiscontinuityError(CstrajError):
    """Adjacent phases along a sweep jumped by more than pi/2."""


class DegenerateInput(CstrajError, ValueError):
    pass


class WidthMismatch(CstrajError, ValueError):
    """Closed-form harmonic propagator requested for a squeezed width."""


class ConfigError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """Oscillator-basis expansion not converged at the basis edge."""
