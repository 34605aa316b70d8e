"""
Core exception classes for the application.

Every error carries an HTTP status code and a detail message so the API layer
can return it unchanged and the management script can print it.
"""
from typing import Optional


class ForecastError(Exception):
    """Base exception class for domain errors."""

    status_code: int = 500

    def __init__(self, detail: str, status_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if status_code is not None:
            self.status_code = status_code


class ValidationError(ForecastError):
    """Input violates a domain invariant."""

    status_code = 422


class ConfigError(ValidationError):
    """Run configuration is invalid."""

    def __init__(self, detail: str, key: Optional[str] = None):
        super().__init__(detail)
        self.key = key


class CsvFormatError(ValidationError):
    """A CSV row could not be parsed or validated."""

    def __init__(self, line: int, field: str, reason: str):
        super().__init__(f"line {line}, field '{field}': {reason}")
        self.line = line
        self.field = field


class DimensionMismatchError(ValidationError):
    """Feature vectors of different lengths were combined."""

    def __init__(self, expected: int, got: int):
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class DegenerateCurveError(ValidationError):
    """The curve carries no signal to fit (all accuracies zero)."""

    def __init__(self, detail: str = "degenerate curve"):
        super().__init__(detail)


class EmptyGridError(ValidationError):
    """No axes were given."""

    def __init__(self):
        super().__init__("empty grid")


class NotFoundError(ForecastError):
    """Resource not found exception."""

    status_code = 404

    def __init__(self, resource: str, identifier: str):
        super().__init__(f"{resource} '{identifier}' not found")


class SolverError(ForecastError):
    """An iterative solver hit its iteration cap."""


class ExplorationError(ForecastError):
    """Hyper-parameter exploration produced no usable result."""
