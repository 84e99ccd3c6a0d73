# label_uncertainty/error_codes.py
from enum import IntEnum


class UncertaintyErrorCode(IntEnum):
    """Error codes for every failure family raised by the library."""
    EMPTY_LABELS = 1001
    UNKNOWN_GRADE = 1002
    INVALID_PARAMETER = 1003
    SHAPE_MISMATCH = 1004
    NON_FINITE_INPUT = 1005
    MODE_MISMATCH = 1006
    AUC_UNDEFINED = 1007
    CORRELATION_UNDEFINED = 1008
    BIAS_FORMULA_UNAVAILABLE = 1009
    SUPPORT_TOO_LARGE = 1010
    DATASET = 1011
    INVARIANT_VIOLATION = 1012


class ExitCode(IntEnum):
    """Process exit codes for the experiment CLI."""
    OK = 0
    USAGE = 1
    DATA = 2
    INVARIANT = 3
