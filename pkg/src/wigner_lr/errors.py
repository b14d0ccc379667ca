"""Exception types shared across the package."""


class WLRError(Exception):
    """Base class for all package errors."""


class InvalidArgument(WLRError, ValueError):
    """Malformed input: wrong arity, bad dimensions, out-of-range parameter."""


class UnsupportedSize(WLRError, ValueError):
    """The requested system size is outside what an exact routine can enumerate."""


class NumericalFailure(WLRError, RuntimeError):
    """A numerical subroutine (LP solve, optimizer) did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NoViolationError(WLRError, ValueError):
    """Raised when a threshold is requested for a state that never violates."""
