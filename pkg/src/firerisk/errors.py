"""Exception hierarchy shared by every stage of the workflow."""


class FireRiskError(Exception):
    """Base class for all package errors."""


class InputError(FireRiskError):
    """Bad or inconsistent input data."""


class ConfigError(FireRiskError):
    """Invalid pipeline configuration."""


class NumericError(FireRiskError):
    """A numerical routine failed in a way the caller cannot recover from."""


# raster_core
class OutOfBounds(InputError):
    pass


class NoOverlap(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class DuplicateName(InputError):
    pass


class FrameMismatch(DimensionMismatch):
    pass


# ingest
class MalformedHeader(InputError):
    pass


class CellCountMismatch(InputError):
    pass


class NonNumericToken(InputError):
    pass


class MalformedJson(InputError):
    pass


class UnsupportedGeometry(InputError):
    pass


class EmptyLayer(InputError):
    pass


class NonPointGeometry(InputError):
    pass


class NonPositiveRadius(InputError):
    pass


class UnknownCategory(InputError):
    pass


# temporal
class EmptyBand(InputError):
    pass


class UnknownYear(InputError):
    pass


class InvalidMonth(InputError):
    pass


# imputation
class InvalidK(InputError):
    pass


class InvalidRadius(InputError):
    pass


class TooFewValidCells(InputError):
    pass


# analysis / models / evaluation
class TooFewSamples(InputError):
    pass


class EmptyHistogram(InputError):
    pass


class EmptyData(InputError):
    pass


class SingleClass(InputError):
    pass


class FeatureMismatch(InputError):
    pass


class NotSupported(FireRiskError):
    pass


class LengthMismatch(InputError):
    pass


class EmptySeason(InputError):
    pass


# sampling
class InsufficientCandidates(InputError):
    pass


class EmptyTestAfterBuffer(InputError):
    pass


# riskmap
class TooFewCells(InputError):
    pass


class InvalidClassValue(InputError):
    pass


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap."""
