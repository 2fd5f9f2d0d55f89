"""Exception types shared across the package."""


class GexgenError(Exception):
    """Base class for all package-specific errors."""


class SingleClassHistogram(GexgenError):
    """Histogram has all of its mass in a single bin; no threshold exists."""


class AllGenesDropped(GexgenError):
    """Gene filtering removed every column."""


class TooFewCases(GexgenError):
    """Not enough cases to build a train/test split."""


class DimensionMismatch(GexgenError):
    """Tensor shapes do not agree with the operation's contract."""


class HeadsDontDivide(GexgenError):
    """Embedding dimension is not divisible by the number of attention heads."""


class UnknownVariant(GexgenError):
    """Fusion variant name is not one of the supported set."""


class EncoderFailure(GexgenError):
    """An encoder adapter failed to produce embeddings."""


class NoTiles(GexgenError):
    """No tiles available to sample from."""


class KeyNotFound(GexgenError):
    """Embedding store has no entry under the requested key."""


class CorruptEntry(GexgenError):
    """Embedding store entry failed its checksum or shape validation."""


class NonFiniteLoss(GexgenError):
    """A training loss became NaN or infinite."""


class MissingLabels(GexgenError):
    """Categorical labels required by the operation are absent."""


class CorruptCheckpoint(GexgenError):
    """Checkpoint file is unreadable or fails its checksum."""


class VersionMismatch(GexgenError):
    """Checkpoint metadata is incompatible with the target model."""


class TooFewPoints(GexgenError):
    """Dataset has too few points for the requested neighbor order."""


class TooFewSamples(GexgenError):
    """Not enough samples for the requested metric."""


class ClassAbsentInTrain(GexgenError):
    """A test-set class never appears in the training labels."""


class ConfigError(GexgenError):
    """Run configuration is malformed (unknown keys, bad values, missing paths)."""


class DataError(GexgenError):
    """Input data files are missing or malformed."""


class WorkdirLocked(GexgenError):
    """Another command currently holds the workdir lock."""
