"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid physical or ensemble configuration (bad coin, start on a trap, ...)."""


class FitError(RuntimeError):
    """A stretched-exponential or spread fit could not be performed."""


class WindowOverflowError(RuntimeError):
    """Density-operator mass reached the edge of the finite position window."""
