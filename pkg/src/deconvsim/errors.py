"""Exception types shared across the simulator."""


class DeconvSimError(Exception):
    """Base class so callers can catch everything from this package."""


class ShapeMismatchError(DeconvSimError):
    """Tensor or descriptor shapes are inconsistent with each other."""


class ConfigError(DeconvSimError):
    """Accelerator configuration is invalid or cannot run the given layer."""


class SchemaError(DeconvSimError):
    """Network or config JSON does not match the expected schema."""


class AccumulatorOverflowError(DeconvSimError):
    """A fixed-point accumulation exceeded the accumulator word length."""


class TraceLimitError(DeconvSimError):
    """Event simulation exceeded its configured cycle budget."""
