"""nsdual exceptions.

Every failure the library raises carries a numeric code, a category and a
severity so the command line can turn it into an exit code and a
machine-readable reason.
"""

from enum import IntEnum
from typing import Any, Dict, Optional, Union


class ErrorCode(IntEnum):
    """Numeric error codes, grouped by thousands per category."""

    SUCCESS = 0
    UNKNOWN_ERROR = 1000
    PARSE_ERROR = 1001
    MISSING_FILE = 1002
    VALIDATION_FAILED = 4001
    INVALID_UTILITY = 4002
    INVALID_TREE = 4003
    INVALID_CLAIM = 4004
    INVALID_SCENARIO = 4005
    DOMAIN_ERROR = 4006
    SHIFT_REQUIRED = 4007
    INADMISSIBLE_UTILITY = 4008
    PRECONDITION_FAILED = 4009
    INVALID_TOLERANCE = 4010
    SOLVER_FAILED = 5001
    UNBOUNDED_PROBLEM = 5002
    BRACKET_INVALID = 5003
    NOT_CONVERGED = 5004
    ARBITRAGE = 7001
    VERTEX_CAP_EXCEEDED = 7002
    VERIFICATION_FAILED = 8001


class ErrorCategory(IntEnum):
    """Coarse error families."""

    UNKNOWN = 0
    INPUT = 1
    SOLVER = 2
    VALIDATION = 5
    MARKET = 7
    VERIFICATION = 8


class ErrorSeverity(IntEnum):
    """How bad an error is."""

    INFO = 0
    WARNING = 1
    ERROR = 2
    CRITICAL = 3
    FATAL = 4


class NsDualError(Exception):
    """Base exception for all nsdual errors."""

    def __init__(
        self,
        message: str,
        error_code: Optional[Union[int, ErrorCode]] = None,
        category: Optional[Union[int, ErrorCategory]] = None,
        severity: Optional[Union[int, ErrorSeverity]] = None,
        details: Optional[Dict[str, Any]] = None,
        field: Optional[str] = None,
    ):
        super().__init__(message)
        self.message = message
        self.error_code = ErrorCode(error_code) if error_code is not None else None
        self.category = ErrorCategory(category) if category is not None else None
        self.severity = (
            ErrorSeverity(severity) if severity is not None else ErrorSeverity.ERROR
        )
        self.details = details or {}
        self.field = field

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary representation."""
        from nsdual.logging import get_logger

        logger = get_logger("exceptions.serialization")

        result = {
            "type": self.__class__.__name__,
            "message": self.message,
            "error_code": self.error_code.value if self.error_code else None,
            "error_name": self.error_code.name if self.error_code else None,
            "category": self.category.name if self.category is not None else None,
            "severity": self.severity.name,
            "details": self.details,
            "field": self.field,
        }

        logger.debug(
            "Serialized exception to dictionary",
            exception_type=self.__class__.__name__,
            error_code=result["error_code"],
            has_details=bool(self.details),
            has_field=bool(self.field),
        )

        return result


class InputError(NsDualError):
    """Unreadable or malformed input files."""

    def __init__(self, message: str, error_code: Optional[Union[int, ErrorCode]] = None, **kwargs):
        super().__init__(
            message=message, error_code=error_code, category=ErrorCategory.INPUT, **kwargs
        )


class ValidationError(NsDualError):
    """Data validation errors."""

    def __init__(self, message: str, error_code: Optional[Union[int, ErrorCode]] = None, **kwargs):
        super().__init__(
            message=message,
            error_code=error_code or ErrorCode.VALIDATION_FAILED,
            category=ErrorCategory.VALIDATION,
            **kwargs,
        )


class MarketError(NsDualError):
    """Market model errors (arbitrage, oversized polytopes)."""

    def __init__(self, message: str, error_code: Optional[Union[int, ErrorCode]] = None, **kwargs):
        super().__init__(
            message=message, error_code=error_code, category=ErrorCategory.MARKET, **kwargs
        )


class SolverError(NsDualError):
    """Numerical solver failures."""

    def __init__(self, message: str, error_code: Optional[Union[int, ErrorCode]] = None, **kwargs):
        super().__init__(
            message=message,
            error_code=error_code or ErrorCode.SOLVER_FAILED,
            category=ErrorCategory.SOLVER,
            **kwargs,
        )


class VerificationError(NsDualError):
    """A verifier threshold was not met."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(
            message=message,
            error_code=ErrorCode.VERIFICATION_FAILED,
            category=ErrorCategory.VERIFICATION,
            **kwargs,
        )


class ScenarioParseError(InputError):
    """Scenario file could not be read or decoded."""

    def __init__(self, message: str, **kwargs):
        error_code = kwargs.pop("error_code", None) or ErrorCode.PARSE_ERROR
        super().__init__(message=message, error_code=error_code, **kwargs)


class DomainError(ValidationError):
    """Argument outside the effective domain of a function."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(message=message, error_code=ErrorCode.DOMAIN_ERROR, **kwargs)


class ShiftRequiredError(ValidationError):
    """The conjugate is not positive on the checked region."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(message=message, error_code=ErrorCode.SHIFT_REQUIRED, **kwargs)


class InadmissibleError(ValidationError):
    """Utility or loss fails the growth and domain conditions."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(
            message=message, error_code=ErrorCode.INADMISSIBLE_UTILITY, **kwargs
        )


class PreconditionError(ValidationError):
    """An operation was called outside its preconditions."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(
            message=message, error_code=ErrorCode.PRECONDITION_FAILED, **kwargs
        )


class ArbitrageError(MarketError):
    """No equivalent martingale measure exists."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(message=message, error_code=ErrorCode.ARBITRAGE, **kwargs)


class UnboundedProblemError(SolverError):
    """The dual objective is unbounded below (W(x) = -inf)."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(
            message=message, error_code=ErrorCode.UNBOUNDED_PROBLEM, **kwargs
        )


class BracketError(SolverError):
    """A root bracket does not straddle zero."""

    def __init__(self, message: str, **kwargs):
        kwargs.pop("error_code", None)
        super().__init__(message=message, error_code=ErrorCode.BRACKET_INVALID, **kwargs)


def create_exception_from_error_code(
    error_code: Union[int, ErrorCode], message: str, **kwargs
) -> NsDualError:
    """Create appropriate exception instance based on error code."""
    from nsdual.logging import get_logger

    logger = get_logger("exceptions.factory")

    if isinstance(error_code, int):
        error_code = ErrorCode(error_code)

    logger.info(
        "Creating exception from error code",
        error_code=error_code.name,
        error_value=error_code.value,
        message=message,
        has_details=bool(kwargs.get("details")),
    )

    exception_map = {
        ErrorCode.PARSE_ERROR: ScenarioParseError,
        ErrorCode.VALIDATION_FAILED: ValidationError,
        ErrorCode.DOMAIN_ERROR: DomainError,
        ErrorCode.SHIFT_REQUIRED: ShiftRequiredError,
        ErrorCode.INADMISSIBLE_UTILITY: InadmissibleError,
        ErrorCode.PRECONDITION_FAILED: PreconditionError,
        ErrorCode.ARBITRAGE: ArbitrageError,
        ErrorCode.SOLVER_FAILED: SolverError,
        ErrorCode.UNBOUNDED_PROBLEM: UnboundedProblemError,
        ErrorCode.BRACKET_INVALID: BracketError,
        ErrorCode.VERIFICATION_FAILED: VerificationError,
    }

    exception_class = exception_map.get(error_code)
    if exception_class is None:
        return NsDualError(message, error_code=error_code, **kwargs)
    if exception_class in (ValidationError, SolverError):
        return exception_class(message, error_code=error_code, **kwargs)
    return exception_class(message, **kwargs)
