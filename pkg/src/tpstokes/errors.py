"""Exception and warning types shared across the package."""


class TPStokesError(Exception):
    """Base class for all package errors."""


class DomainError(TPStokesError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(TPStokesError, ArithmeticError):
    """A series or expansion failed to reach its target tolerance."""


class QuadratureError(TPStokesError, ArithmeticError):
    """Numerical quadrature did not meet its requested tolerance."""


class FitError(TPStokesError, ValueError):
    """Data unsuitable for a log-log / rate regression."""


class ConfigError(TPStokesError, ValueError):
    """Invalid grid or run configuration."""


class ShapeError(TPStokesError, ValueError):
    """Array shape or representation does not match the grid."""


class CompatibilityError(TPStokesError, ValueError):
    """Forcing violates the zero space-time mean condition."""


class TruncationWarning(RuntimeWarning):
    """Adaptive mode truncation stopped at the hard cap."""
