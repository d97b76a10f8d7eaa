class EsoError(Exception):
    """Base class for package errors."""


class ValidationError(EsoError, ValueError):
    """Invalid parameters supplied to a constructor."""


class DomainError(EsoError, ValueError):
    """Argument outside the domain where an operation is defined."""


class ConfigurationError(EsoError):
    """A numerical grid or solver setting that cannot produce a sound result."""


class RangeError(EsoError, ValueError):
    """Target value not attainable; ``interval`` holds the attainable range."""

    def __init__(self, msg, interval=None):
        super().__init__(msg)
        self.interval = interval
