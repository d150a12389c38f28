from typing import Dict, Optional, Type


class HyperHopException(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


# 1. Input errors

class DataValidationError(HyperHopException):
    def __init__(self, message="Provided data is invalid."):
        super().__init__(message)


class MalformedInputError(DataValidationError):
    def __init__(self, message="Malformed input line.", source: Optional[str] = None,
                 line_number: Optional[int] = None):
        self.source = source
        self.line_number = line_number
        if line_number is not None:
            message = f"{source or '<input>'}:{line_number}: {message}"
        super().__init__(message)


class DimensionMismatchError(DataValidationError):
    def __init__(self, message="Vector dimensions do not agree."):
        super().__init__(message)


class DuplicateNameError(DataValidationError):
    def __init__(self, message="Duplicate name."):
        super().__init__(message)


class MissingNameError(DataValidationError):
    def __init__(self, message="A referenced name does not exist."):
        super().__init__(message)


class MissingAnnotationError(DataValidationError):
    def __init__(self, message="A required annotation is missing."):
        super().__init__(message)


class UnknownPairError(DataValidationError):
    def __init__(self, message="Type pair has no relation mapping."):
        super().__init__(message)


class MissingEvidenceError(DataValidationError):
    def __init__(self, message="No evidence path exists in the graph."):
        super().__init__(message)


class AmbiguousEvidenceError(DataValidationError):
    def __init__(self, message="More than one evidence path exists in the graph.", candidates=None):
        self.candidates = list(candidates or [])
        super().__init__(message)


class EmptyInputError(DataValidationError):
    def __init__(self, message="Input is empty."):
        super().__init__(message)


class RecordNotFoundError(DataValidationError):
    def __init__(self, message="The requested record was not found."):
        super().__init__(message)


class SampleCapExceededError(DataValidationError):
    def __init__(self, message="Sample is larger than the exhaustive-scan cap."):
        super().__init__(message)


# 2. Numerical domain errors

class GeometryDomainError(DataValidationError):
    def __init__(self, message="Point is outside the Poincaré ball."):
        super().__init__(message)


class ZeroWeightRowError(DataValidationError):
    def __init__(self, message="Weight row z_k has zero norm."):
        super().__init__(message)


# 3. Check failures

class CheckFailedError(HyperHopException):
    def __init__(self, message="A numerical check failed."):
        super().__init__(message)


class DegenerateSampleError(CheckFailedError):
    def __init__(self, message="Sample has zero diameter."):
        super().__init__(message)


class CurvatureUndefinedError(CheckFailedError):
    def __init__(self, message="Curvature is undefined for a non-positive relative delta."):
        super().__init__(message)


class LayerOverflowError(CheckFailedError):
    def __init__(self, message="Logit exceeds the sinh-safe range."):
        super().__init__(message)


class DivergenceError(CheckFailedError):
    def __init__(self, message="Training loss became non-finite."):
        super().__init__(message)


class GradientCheckError(CheckFailedError):
    def __init__(self, message="Analytic gradient disagrees with finite differences."):
        super().__init__(message)


EXIT_CODES: Dict[Type[HyperHopException], int] = {
    HyperHopException: 1,           # Internal error (generic fallback)
    DataValidationError: 2,         # Input error
    CheckFailedError: 3,            # Check failure
}

EXCEPTION_STATUS_CODES: Dict[Type[HyperHopException], int] = {
    HyperHopException: 500,         # Internal Server Error (generic fallback)
    DataValidationError: 400,       # Bad Request
    RecordNotFoundError: 404,       # Not Found
    MissingNameError: 404,          # Not Found
    GeometryDomainError: 422,       # Unprocessable Entity
    CheckFailedError: 422,          # Unprocessable Entity
}


def _lookup(table: Dict[Type[HyperHopException], int], exc: BaseException, default: int) -> int:
    for klass in type(exc).__mro__:
        if klass in table:
            return table[klass]
    return default


def exit_code_for(exc: BaseException) -> int:
    return _lookup(EXIT_CODES, exc, 1)


def status_code_for(exc: BaseException) -> int:
    return _lookup(EXCEPTION_STATUS_CODES, exc, 500)
