# label_uncertainty/errors.py
"""
Exception hierarchy for label-uncertainty.

Every error carries a stable numeric code and the CLI exit code it maps to.
"""
from typing import Any, Dict

from label_uncertainty.error_codes import ExitCode, UncertaintyErrorCode


class UncertaintyError(Exception):
    """Base for all label-uncertainty errors."""
    CODE: UncertaintyErrorCode
    EXIT: ExitCode = ExitCode.DATA

    def __init__(self, message: str | None = None, *, data: Any | None = None) -> None:
        super().__init__(message or self.__class__.__name__)
        self.message: str = message or self.__class__.__name__
        self.data: Any | None = data

    def to_dict(self) -> Dict[str, Any]:
        err: Dict[str, Any] = {"code": int(self.CODE), "message": self.message}
        if self.data is not None:
            err["data"] = self.data
        return err


class EmptyLabelsError(UncertaintyError):
    """A label multiset was empty."""
    CODE = UncertaintyErrorCode.EMPTY_LABELS


class UnknownGradeError(UncertaintyError):
    """A label does not index into the grade scale."""
    CODE = UncertaintyErrorCode.UNKNOWN_GRADE


class InvalidParameterError(UncertaintyError):
    """An argument is outside its admissible range."""
    CODE = UncertaintyErrorCode.INVALID_PARAMETER
    EXIT = ExitCode.USAGE


class ShapeMismatchError(UncertaintyError):
    """Array lengths or dimensions disagree."""
    CODE = UncertaintyErrorCode.SHAPE_MISMATCH


class NonFiniteInputError(UncertaintyError):
    """An input contained NaN or infinity."""
    CODE = UncertaintyErrorCode.NON_FINITE_INPUT


class ModeMismatchError(UncertaintyError):
    """A model or target was used with the wrong training mode."""
    CODE = UncertaintyErrorCode.MODE_MISMATCH


class AUCUndefinedError(UncertaintyError):
    """ROC AUC needs both classes among the targets."""
    CODE = UncertaintyErrorCode.AUC_UNDEFINED


class CorrelationUndefinedError(UncertaintyError):
    """Rank correlation of a constant vector is undefined."""
    CODE = UncertaintyErrorCode.CORRELATION_UNDEFINED


class BiasFormulaUnavailableError(UncertaintyError):
    """No closed-form bias exists for the requested uncertainty kind."""
    CODE = UncertaintyErrorCode.BIAS_FORMULA_UNAVAILABLE


class SupportTooLargeError(UncertaintyError):
    """The exact transport oracle only handles small supports."""
    CODE = UncertaintyErrorCode.SUPPORT_TOO_LARGE


class DatasetError(UncertaintyError):
    """A dataset, model or world file is missing, malformed or incompatible."""
    CODE = UncertaintyErrorCode.DATASET


class InvariantViolationError(UncertaintyError):
    """A numerical identity that must hold did not."""
    CODE = UncertaintyErrorCode.INVARIANT_VIOLATION
    EXIT = ExitCode.INVARIANT
