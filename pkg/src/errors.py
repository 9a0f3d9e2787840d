# src/errors.py
from typing import Optional


class VineKDEError(Exception):
    """Base class for all errors raised by the package."""

    category = "runtime"


class ValidationError(VineKDEError):
    """Input or configuration did not meet a documented precondition."""

    category = "validation"


class DomainError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class DegenerateDataError(ValidationError):
    def __init__(self, message: str, column: Optional[int] = None):
        super().__init__(message)
        self.column = column


class DimensionMismatchError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class DataFormatError(ValidationError):
    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class ModelFormatError(ValidationError):
    """A model or report file could not be parsed or failed schema validation."""

    category = "schema"

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{message} (at {location})")
        self.location = location


class EstimationError(VineKDEError):
    category = "runtime"
