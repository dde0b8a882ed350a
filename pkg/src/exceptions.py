"""
Exception hierarchy for the AMD forecaster.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class AmdError(Exception):
    """Root of every error raised by this package."""


class ConfigError(AmdError, ValueError):
    """Invalid configuration: unknown keys, broken invariants, unknown modes."""


class DataError(AmdError, ValueError):
    """Input data that cannot be used: bad cells, short partitions, shape mismatch."""


class CheckpointError(DataError):
    """Checkpoint container is corrupt, truncated or of another version."""


class ShapeError(AmdError, ValueError):
    """Tensor or block contract violated."""


class GraphFreedError(AmdError, RuntimeError):
    """backward() called on a graph that was already consumed."""


class NumericError(AmdError, ArithmeticError):
    """Non-finite values, or a numeric property check that failed."""
