"""Custom exceptions for GhostSeg."""

from typing import Any


class GhostSegError(Exception):
    """Base exception for all GhostSeg errors."""

    exit_code = 1

    def __init__(self, message: str, error_code: str | None = None):
        super().__init__(message)
        self.message = message
        self.error_code = error_code


class ConfigurationError(GhostSegError):
    """Raised when a spec or configuration file is invalid."""

    exit_code = 2


class UsageError(GhostSegError):
    """Raised when an operation is called with inputs it cannot accept."""

    exit_code = 2


class ValidationError(GhostSegError):
    """Raised when parameter validation fails."""

    exit_code = 2


class DataError(GhostSegError):
    """Raised when dataset files are missing, unpaired or out of range."""

    exit_code = 3

    def __init__(self, message: str, errors: list[str] | None = None, error_code: str | None = None):
        super().__init__(message, error_code)
        self.errors = list(errors or [])


class FileOperationError(GhostSegError):
    """Raised when checkpoint or output files cannot be read or written."""

    exit_code = 3


class NumericalError(GhostSegError):
    """Raised when training produces a non-finite loss."""

    exit_code = 4

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None, error_code: str | None = None):
        super().__init__(message, error_code)
        self.diagnostics = dict(diagnostics or {})
