"""
Custom exceptions for the scatternet inverse-scattering toolkit.
"""
from typing import Any, Optional


class ScatterNetError(Exception):
    """Base exception for the scatternet package."""

    def __init__(self, message: str, error_code: Optional[str] = None):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


class ValidationError(ScatterNetError):
    """Raised when input validation fails."""

    def __init__(self, message: str = "Input validation failed"):
        super().__init__(message, "VALIDATION_ERROR")


class ConfigurationError(ScatterNetError):
    """Raised when a run configuration or command line is unusable."""

    def __init__(self, message: str = "Invalid configuration"):
        super().__init__(message, "CONFIG_ERROR")


class SpecialFunctionDomainError(ScatterNetError):
    """Raised when a Bessel/Hankel function is evaluated outside its domain."""

    def __init__(self, message: str = "Argument outside the function domain"):
        super().__init__(message, "DOMAIN_ERROR")


class GeometryError(ScatterNetError):
    """Raised when grids, antennas or pixel indices are inconsistent."""

    def __init__(self, message: str = "Invalid measurement geometry"):
        super().__init__(message, "GEOMETRY_ERROR")


class NonConvergenceError(ScatterNetError):
    """Raised when a linear solve misses its residual target."""

    def __init__(
        self,
        message: str = "Linear solver did not converge",
        residual: float = float("nan"),
        transmitter: Optional[int] = None,
    ):
        self.residual = residual
        self.transmitter = transmitter
        if transmitter is not None:
            message = f"{message} (transmitter {transmitter})"
        super().__init__(message, "NON_CONVERGENCE")


class SeriesConvergenceError(ScatterNetError):
    """Raised when a truncated cylindrical-harmonic series has not converged."""

    def __init__(self, message: str = "Series truncation did not converge"):
        super().__init__(message, "SERIES_ERROR")


class InversionError(ScatterNetError):
    """Raised when an iterative inversion fails; keeps the trace gathered so far."""

    def __init__(self, message: str = "Inversion failed", trace: Any = None):
        self.trace = trace
        super().__init__(message, "INVERSION_ERROR")


class NetworkShapeError(ScatterNetError):
    """Raised when tensors and layers disagree on shape."""

    def __init__(self, message: str = "Tensor shape mismatch"):
        super().__init__(message, "SHAPE_ERROR")


class MissingMemoError(ScatterNetError):
    """Raised when backpropagation runs without the forward-pass memos."""

    def __init__(self, message: str = "Forward memo missing for backward pass"):
        super().__init__(message, "MEMO_ERROR")


class FormatError(ScatterNetError):
    """Raised when a binary file does not match its declared format."""

    def __init__(
        self,
        message: str = "Malformed file",
        expected: Optional[Any] = None,
        actual: Optional[Any] = None,
    ):
        self.expected = expected
        self.actual = actual
        super().__init__(message, "FORMAT_ERROR")


class DatasetError(ScatterNetError):
    """Raised when building or splitting a dataset fails."""

    def __init__(self, message: str = "Dataset operation failed", sample_index: Optional[int] = None):
        self.sample_index = sample_index
        if sample_index is not None:
            message = f"{message} (sample {sample_index})"
        super().__init__(message, "DATASET_ERROR")


class StorageError(ScatterNetError):
    """Raised when a file cannot be read or written."""

    def __init__(self, message: str = "File access failed", path: Optional[str] = None):
        self.path = path
        if path is not None:
            message = f"{message}: {path}"
        super().__init__(message, "STORAGE_ERROR")
