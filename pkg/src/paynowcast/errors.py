"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without a lookup table.
"""

from __future__ import annotations


class PaynowcastError(Exception):
    exit_code = 1


class ConfigError(PaynowcastError):
    exit_code = 2


class ConfigInvalid(ConfigError):
    pass


class DataError(PaynowcastError, ValueError):
    exit_code = 3


class MissingColumn(DataError):
    pass


class MissingData(DataError):
    pass


class UnparseableCell(DataError):
    pass


class UnparseableDate(UnparseableCell):
    pass


class UnparseableValue(UnparseableCell):
    pass


class DuplicatePeriod(DataError):
    pass


class MissingYear(DataError):
    pass


class FrequencyMismatch(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class ZeroVolume(DataError):
    def __init__(self, period):
        super().__init__(f"volume is zero at {period}")
        self.period = period


class SeriesTooShort(DataError):
    pass


class TooFewPoints(DataError):
    pass


class ZeroVariance(DataError):
    pass


class ConstantColumn(DataError):
    def __init__(self, name):
        super().__init__(f"column {name!r} is constant")
        self.name = name


class EmptySide(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class NumericError(PaynowcastError, ArithmeticError):
    exit_code = 4


class RankDeficient(NumericError):
    def __init__(self, rank, p):
        super().__init__(f"design matrix has rank {rank} < {p} columns")
        self.rank = rank
        self.p = p


class InsufficientObservations(NumericError):
    pass


class InvalidParameter(NumericError, ValueError):
    pass


class RhoOutOfRange(NumericError):
    def __init__(self, rho):
        super().__init__(f"estimated AR(1) coefficient {rho:.6g} is outside (-1, 1)")
        self.rho = rho


class DegreeTooHigh(NumericError, ValueError):
    pass


class AllZeroResiduals(NumericError):
    pass


class SampleTooSmall(NumericError):
    pass


class DegenerateRecursion(NumericError):
    pass


class RankDeficientPrefix(NumericError):
    pass


class NotTimeOrdered(DataError):
    pass


class FoldTooSmall(NumericError):
    pass


class ConvergenceError(NumericError):
    pass


class ReportError(PaynowcastError):
    exit_code = 5


class SerializationError(ReportError):
    pass


class UnsupportedKind(ReportError, ValueError):
    pass


class FetchError(PaynowcastError):
    exit_code = 5


class NetworkError(FetchError):
    pass


class HttpStatusError(FetchError):
    def __init__(self, status, url):
        super().__init__(f"HTTP {status} from {url}")
        self.status = status
        self.url = url


class StageFailure(PaynowcastError):
    """A pipeline stage failed; ``cause`` holds the original exception."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        if isinstance(cause, OSError):
            self.exit_code = 5


# warnings (never raised as errors)
class DegenerateFit(UserWarning):
    pass


class RuleRangeOutsideData(UserWarning):
    pass
