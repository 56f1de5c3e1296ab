"""Error types shared across the package."""


class InvalidNetworkError(ValueError):
    """An operation received a network that fails structural validation."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its budget before reaching tolerance."""
