class HardyBoundsError(ValueError):
    """Base class for every error raised by the hardy package."""


class WeightError(HardyBoundsError):
    """Invalid weights, weight spec or weight file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(HardyBoundsError):
    """Not enough terms for the requested quantity."""


class DomainError(HardyBoundsError):
    """A parameter lies outside the domain where the expression is defined."""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"{message} (at n={index})"
        super().__init__(message)
        self.index = index


class NumericError(HardyBoundsError):
    """A non-finite value showed up in an intermediate result."""
