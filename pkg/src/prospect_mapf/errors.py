"""Shared exception types."""


class MapFormatError(ValueError):
    """Raised for malformed ASCII map input."""


class InfeasibleError(RuntimeError):
    """Raised when a map, scenario, or problem set cannot be realized."""


class InvariantViolation(RuntimeError):
    """Internal consistency failure. Indicates a bug; callers should abort loudly."""
