"""Exception types shared across the package."""


class PolypGanError(Exception):
    """Base class for all package errors."""


class EmptyInput(PolypGanError):
    """An operation received an empty dataset or empty list."""


class MixedShapes(PolypGanError):
    """Tensors that must share a shape do not."""


class BadShape(PolypGanError):
    """A tensor shape violates a network's spatial constraints."""


class SplitTooLarge(PolypGanError):
    """Requested train/val split exceeds the dataset size."""


class OutOfRange(PolypGanError):
    """Values fall outside the expected numeric range."""


class NonBinary(PolypGanError):
    """A mask expected to contain only {0, 1} has other values."""


class NonFiniteLoss(PolypGanError):
    """A training loss became NaN or infinite."""


class BadCheckpoint(PolypGanError):
    """Checkpoint file is corrupt, truncated, or version-incompatible."""


class EmptyDataset(PolypGanError):
    """A dataset with zero samples was requested or loaded."""
