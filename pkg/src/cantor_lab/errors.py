"""Typed errors raised by analysis preconditions."""


class CantorLabError(Exception):
    """Base class for all package errors."""


class ParameterError(CantorLabError, ValueError):
    """Invalid model / law / pattern parameters."""


class LevelError(CantorLabError, ValueError):
    """A requested level is outside the generated depth, or too few levels."""


class DomainError(CantorLabError, ValueError):
    """A point or argument lies outside its admissible domain."""


class DimensionError(CantorLabError, ValueError):
    """Operation is not defined for the realization's ambient dimension."""


class BudgetError(CantorLabError, RuntimeError):
    """Exhaustive enumeration would exceed the documented desk-scale budget."""


class InsufficientDataError(CantorLabError, ValueError):
    """Too few levels, frequencies or radii for the requested estimate."""
