"""Exception types shared across the package."""


class GpstackError(Exception):
    """Base class for all gpstack errors."""


class ConfigError(GpstackError):
    """Invalid or inconsistent pipeline configuration."""


class DimensionMismatch(GpstackError):
    """Operands do not agree in shape or length."""


class NotPositiveDefinite(GpstackError):
    """Cholesky failed even at the maximum jitter level."""


class LayoutMismatch(GpstackError):
    """A stacked feature vector does not conform to the declared column layout."""


class EmptyInput(GpstackError):
    """An operation that needs at least one element received none."""


class ZeroVariance(GpstackError):
    """All actual values are identical, so R-squared is undefined."""


class TooFewPoints(GpstackError):
    """Not enough observations to fit the requested model."""


class NoTrainableTasks(GpstackError):
    """Every task was rejected by the MPE gate; the ensemble has no training rows."""


class MissingCovariate(GpstackError):
    """A weather row (or other required covariate) is absent for a needed month."""


class SchemaError(GpstackError):
    """An input file does not match the expected schema."""


class JoinError(GpstackError):
    """Records could not be joined on their shared key."""


class UnitError(GpstackError):
    """Unknown consumption unit tag."""


class OverlapError(GpstackError):
    """Billing intervals overlap."""


class NegativeTotal(GpstackError):
    """A billing interval reports negative consumption."""


class EmptySplit(GpstackError):
    """A train/test split boundary leaves one side empty."""


class ArtifactError(GpstackError):
    """A model artifact is unreadable or has an incompatible version."""
