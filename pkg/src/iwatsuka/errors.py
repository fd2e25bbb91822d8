"""Exception hierarchy shared by the solver modules and the CLI."""


class IwatsukaError(Exception):
    """Base class for all package errors."""


class ProfileError(IwatsukaError, ValueError):
    """Malformed profile, curve or geometry data."""


class ConfigError(IwatsukaError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class NumericalError(IwatsukaError, RuntimeError):
    """A solve could not be completed (CLI exit code 1)."""


class NonConfiningError(NumericalError):
    """The fiber potential does not grow in both directions."""


class EigenvalueCollisionError(NumericalError):
    """Two computed eigenvalues are closer than the simplicity tolerance."""


class ConvergenceError(NumericalError):
    """An iterative method did not reach its tolerance."""
