"""Exception hierarchy shared by every module."""


class FourlinError(Exception):
    """Base class for all library errors."""


class InvalidFieldError(FourlinError, ValueError):
    """Field values are malformed (wrong shape, non-finite, wrong dtype)."""


class ModeRangeError(FourlinError, ValueError):
    """An index or mode lies outside the representable range of a grid."""


class SymmetryError(FourlinError, ValueError):
    """A real result was requested from a spectrum that is not Hermitian."""


class OracleSizeError(FourlinError, ValueError):
    """A brute-force oracle was asked to work on a grid larger than its cap."""


class ResolutionError(FourlinError, ValueError):
    """Grid too coarse for the requested truncation, or incompatible grids."""


class PreconditionError(FourlinError, ValueError):
    """Input parameters violate a documented precondition."""


class DegenerateTargetError(FourlinError, ZeroDivisionError):
    """A relative metric was requested for a zero-norm target."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"target {index} has zero L2 norm")


class NonConvergenceError(FourlinError, RuntimeError):
    """Iterative fitting failed to make progress; carries its diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
