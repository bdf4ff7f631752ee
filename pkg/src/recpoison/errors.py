"""Exception types shared across the package."""


class RecPoisonError(Exception):
    """Base class for package-specific failures."""


class ParseError(RecPoisonError, ValueError):
    """Raised when an input file cannot be parsed; carries the line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyDatasetError(RecPoisonError, ValueError):
    """Raised when an input source yields no interactions."""


class DivergenceError(RecPoisonError, RuntimeError):
    """Raised when training produces non-finite parameters or losses."""

    def __init__(self, message, step=None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


class ConfigError(RecPoisonError, ValueError):
    """Raised when an experiment configuration fails validation."""
