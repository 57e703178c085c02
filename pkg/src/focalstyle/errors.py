"""Exception types shared across the package."""


class FocalStyleError(Exception):
    """Base class for all package-specific errors."""


class ImageFormatError(FocalStyleError):
    """Raised for unsupported or malformed image and mask files."""


class WeightFormatError(FocalStyleError):
    """Raised when a weight archive is truncated or its shapes do not match."""


class ConfigurationError(FocalStyleError):
    """Raised when a backend is misconfigured (missing weights, unknown layer)."""


class DegeneratePartitionError(FocalStyleError):
    """Raised when a requested partition cannot produce a usable region map."""


class DivergenceError(FocalStyleError):
    """Raised when the optimization loss becomes non-finite."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        detail = message or "non-finite loss"
        super().__init__(f"diverged at iteration {iteration}: {detail}")
