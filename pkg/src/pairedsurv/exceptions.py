"""Exception hierarchy."""


class PairedSurvError(Exception):
    """Base class for all package errors."""


class DataError(PairedSurvError, ValueError):
    """Malformed or invalid input data."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        if row is not None or column is not None:
            where = []
            if row is not None:
                where.append(f"row {row!r}")
            if column is not None:
                where.append(f"column {column!r}")
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class DegenerateVarianceError(PairedSurvError, ArithmeticError):
    """A variance estimate required for studentization is zero."""


class ResamplingDegenerateError(DegenerateVarianceError):
    """Every resampling replicate had a degenerate variance."""


class PositivityError(PairedSurvError, ArithmeticError):
    """An influence-function denominator vanished with a nonzero numerator."""


class RatioUndefinedError(PairedSurvError, ArithmeticError):
    """An RMST estimate of zero makes the ratio (or its variance) undefined."""


class TransformUndefinedError(PairedSurvError, ArithmeticError):
    """A transformed confidence interval is undefined at the boundary."""


class NotProportionalError(PairedSurvError, ValueError):
    """Hazards are not proportional, so a single hazard ratio does not exist."""


class ScenarioError(PairedSurvError, ValueError):
    """Invalid or incompatible simulation scenario."""
