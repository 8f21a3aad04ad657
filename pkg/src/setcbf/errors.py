"""Exception types shared across the package."""


class SetCBFError(Exception):
    """Base class for all package errors."""


class InvalidInput(SetCBFError, ValueError):
    """Malformed or out-of-domain arguments."""


class EmptyInterior(SetCBFError):
    """No strictly feasible point could be found for a set."""


class NumericalFailure(SetCBFError):
    """Non-finite iterates or a failed line search."""


class SingularJacobian(SetCBFError):
    """The KKT Jacobian is singular to working tolerance."""


class ConfigError(SetCBFError, ValueError):
    """Invalid simulation configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class IoError(SetCBFError, OSError):
    """Trace or figure output could not be written or read."""
