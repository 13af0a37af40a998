"""Custom exceptions for tcn-bench."""

from collections.abc import Sequence

__all__ = [
    "TCNBenchError",
    "ShapeError",
    "NormalizationError",
    "DatasetError",
    "ManifestParseError",
    "ConfigurationError",
    "NumericalAbortError",
    "InputMissingError",
    "InvalidTargetError",
    "CheckpointError",
]


class TCNBenchError(Exception):
    """Base exception for all tcn-bench errors."""

    pass


class ShapeError(TCNBenchError):
    """Raised when tensor shapes are incompatible."""

    def __init__(
        self,
        message: str,
        expected: Sequence[int] | None = None,
        actual: Sequence[int] | None = None,
    ):
        self.expected = tuple(expected) if expected is not None else None
        self.actual = tuple(actual) if actual is not None else None
        super().__init__(self._format_message(message))

    def _format_message(self, message: str) -> str:
        if self.expected is not None and self.actual is not None:
            return f"{message} (shapes: {self.expected} vs {self.actual})"
        return message


class NormalizationError(TCNBenchError):
    """Raised when a normalization precondition is violated."""

    pass


class DatasetError(TCNBenchError):
    """Raised when dataset parameters are invalid."""

    pass


class ManifestParseError(TCNBenchError):
    """Raised when a manifest file cannot be parsed."""

    def __init__(
        self,
        message: str,
        file_path: str | None = None,
        line_number: int | None = None,
    ):
        self.file_path = file_path
        self.line_number = line_number
        super().__init__(self._format_message(message))

    def _format_message(self, message: str) -> str:
        parts = [message]
        if self.file_path:
            parts.append(f"File: {self.file_path}")
        if self.line_number:
            parts.append(f"Line: {self.line_number}")
        return " | ".join(parts)


class ConfigurationError(TCNBenchError):
    """Raised when configuration is invalid."""

    def __init__(self, message: str, config_key: str | None = None):
        self.config_key = config_key
        if config_key:
            message = f"{message} (Key: {config_key})"
        super().__init__(message)


class NumericalAbortError(TCNBenchError):
    """Raised when training produces a non-finite loss."""

    def __init__(
        self,
        message: str,
        step: int | None = None,
        snapshot_path: str | None = None,
    ):
        self.step = step
        self.snapshot_path = snapshot_path
        parts = [message]
        if step is not None:
            parts.append(f"Step: {step}")
        if snapshot_path:
            parts.append(f"Snapshot: {snapshot_path}")
        super().__init__(" | ".join(parts))


class InputMissingError(TCNBenchError):
    """Raised when a required input file or directory does not exist."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path:
            message = f"{message}: {path}"
        super().__init__(message)


class InvalidTargetError(TCNBenchError):
    """Raised when a class target index is outside the logit range."""

    pass


class CheckpointError(TCNBenchError):
    """Raised when a checkpoint file is malformed or incompatible."""

    def __init__(self, message: str, file_path: str | None = None):
        self.file_path = file_path
        if file_path:
            message = f"{message} | File: {file_path}"
        super().__init__(message)
