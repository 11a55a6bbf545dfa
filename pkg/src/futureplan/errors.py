"""Exception hierarchy shared across the package."""


class FutureplanError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FutureplanError, ValueError):
    """Invalid configuration value or unknown option."""


class InputError(FutureplanError, ValueError):
    """Input array or record does not satisfy an operation's precondition."""


class DomainError(FutureplanError, ValueError):
    """Argument outside the supported domain (e.g. a time outside the horizon)."""


class DatasetError(FutureplanError):
    """Base class for dataset load failures."""


class DatasetVersionError(DatasetError):
    pass


class TruncatedRecordError(DatasetError):
    pass


class ChecksumError(DatasetError):
    pass


class CheckpointError(FutureplanError):
    """Checkpoint file is unreadable, truncated or incompatible."""


class TrainingDivergedError(FutureplanError, RuntimeError):
    """A loss component became non-finite during training."""
