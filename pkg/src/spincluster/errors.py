"""Exception types shared across the package."""


class SpinClusterError(Exception):
    """Base class for all package errors."""


class InvalidStateError(SpinClusterError, ValueError):
    """A Bloch/Stokes vector or density matrix violates its invariants."""


class InvalidChannelError(SpinClusterError, ValueError):
    """A process map is not physical (CP + trace preserving)."""


class ConvergenceError(SpinClusterError, RuntimeError):
    """An iterative routine failed to converge; carries the residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateConditioningError(SpinClusterError, ZeroDivisionError):
    """A conditional spin state was requested on a zero-probability branch."""


class IdentifiabilityError(SpinClusterError, ValueError):
    """A tomography dataset cannot pin down the map; lists missing labels."""

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


class DomainError(SpinClusterError, ValueError):
    """Arguments are outside the mathematical domain of an operation."""


class ConfigError(SpinClusterError, ValueError):
    """A configuration file is missing, malformed, or inconsistent."""


class EmptyRequestError(SpinClusterError, ValueError):
    """Zero samples / bins / points were requested."""
