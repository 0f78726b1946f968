"""Exception types shared across the package."""


class EnsembleError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EnsembleError):
    """A run was configured with unknown sources, groups, or bad parameters."""


class ValidationError(EnsembleError):
    """Input data violates a model invariant (bad spans, unknown documents, ...)."""


class ParseError(EnsembleError):
    """Malformed textual input (expression string, JSONL record, mapping file)."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class UnsupportedOperatorError(EnsembleError):
    """An operator is not defined for the requested evaluation mode."""
