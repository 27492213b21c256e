"""Exception types shared across the package."""


class BogolabError(Exception):
    """Base class for all package errors."""


class DimensionGuardError(BogolabError):
    """Requested Hilbert-space dimension exceeds the configured guard."""


class ConstructionError(BogolabError):
    """Internal consistency failure while assembling an operator."""


class TruncationError(BogolabError):
    """Coherent-vector tail mass exceeds the truncation tolerance."""


class MaximizationError(BogolabError):
    """Scalar maximization failed (e.g. maximum at the expansion limit)."""


class ConfigError(BogolabError):
    """Invalid sweep configuration."""
