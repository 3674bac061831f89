"""Exception hierarchy shared by every module."""


class AnnealSliceError(Exception):
    """Base class for all package errors."""


class DimensionError(AnnealSliceError, ValueError):
    """Bit string or array length does not match the problem size."""


class SizeError(AnnealSliceError, ValueError):
    """Problem too large for an exhaustive operation."""


class ScheduleConstraintError(AnnealSliceError, ValueError):
    """An anneal schedule violates one of the hardware-style constraints."""


class SamplerError(AnnealSliceError, RuntimeError):
    """A sampler backend failed."""


class ConfigurationError(AnnealSliceError, ValueError):
    """Invalid combination of tuning parameters."""


class NormalizationError(AnnealSliceError, ValueError):
    """A series cannot be normalized by its minimum."""


class ParseError(AnnealSliceError, ValueError):
    """Malformed input file; the message carries location context."""
