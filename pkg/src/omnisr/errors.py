"""Exception types shared across the package."""


class OmniSRError(Exception):
    pass


class ShapeError(OmniSRError, ValueError):
    """Tensor shapes are incompatible with the requested operation."""


class ConfigError(OmniSRError, ValueError):
    """Invalid configuration value or layout."""


class UsageError(OmniSRError, ValueError):
    """API misuse (e.g. backward from a non-scalar)."""


class CheckpointError(OmniSRError, IOError):
    """Corrupt, truncated or incompatible checkpoint file."""


class DecodeError(OmniSRError, IOError):
    """Malformed or unsupported image file."""
