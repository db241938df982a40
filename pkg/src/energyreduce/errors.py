"""Exception hierarchy shared by every pipeline stage.

Each exception carries the process exit code the CLI reports for it:
1 usage, 2 data error, 3 numeric failure.
"""
from __future__ import annotations


class PipelineError(Exception):
    exit_code = 2


class UsageError(PipelineError):
    exit_code = 1


class DataError(PipelineError, ValueError):
    exit_code = 2


class NumericError(PipelineError, ArithmeticError):
    exit_code = 3


# telemetry ingest
class MalformedLine(DataError):
    def __init__(self, line_number: int, reason: str, text: str = "") -> None:
        self.line_number = line_number
        self.reason = reason
        self.text = text
        super().__init__(f"line {line_number}: {reason}")


class EmptyInput(DataError):
    pass


class EmptyFrame(DataError):
    pass


# correlation testing
class InsufficientRows(DataError):
    pass


class ZeroVariance(NumericError, ValueError):
    pass


class LengthMismatch(DataError):
    pass


# windowing
class FrameTooShort(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class CannotDropTarget(UsageError, ValueError):
    pass


class UnknownVariable(UsageError, ValueError):
    pass


# regressors
class KTooLarge(UsageError, ValueError):
    pass


class ShapeMismatch(DataError):
    pass


class DivergedLoss(NumericError):
    pass


class RankDeficientWarning(UserWarning):
    """OLS design lacked full column rank; a minimum-norm solution was returned."""

    def __init__(self, columns: list[int]) -> None:
        self.columns = columns
        super().__init__(f"rank-deficient design, dependent columns {columns}")


class NotConvergedWarning(UserWarning):
    pass


class ZeroVarianceTargetWarning(UserWarning):
    pass


# harness and orchestration
class AlgorithmSetMismatch(UsageError, ValueError):
    pass


class InfeasibleCorrelation(UsageError, ValueError):
    pass


class StaleArtifact(DataError):
    pass
