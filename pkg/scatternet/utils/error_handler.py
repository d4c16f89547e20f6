"""
Error handling utilities for the scatternet command line.
"""
import json
import logging
from typing import Any, Dict

from scatternet.exceptions import (
    ConfigurationError,
    NonConvergenceError,
    ScatterNetError,
    ValidationError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class ErrorHandler:
    """Centralized error handling for the command line."""

    @staticmethod
    def to_exit_code(error: Exception) -> int:
        """
        Map an error to a process exit code.

        Args:
            error: The error that stopped the command

        Returns:
            int: 2 for usage/configuration errors, 1 for everything else,
            including validation failures raised while a command runs
        """
        if isinstance(error, ConfigurationError):
            return EXIT_USAGE
        return EXIT_RUNTIME

    @staticmethod
    def describe(error: Exception) -> Dict[str, Any]:
        """
        Create a standardized error description.

        Args:
            error: The error that occurred

        Returns:
            Dict containing error information
        """
        if isinstance(error, ScatterNetError):
            return {
                "error_code": error.error_code,
                "type": type(error).__name__,
                "message": error.message,
            }
        return {
            "error_code": "UNEXPECTED_ERROR",
            "type": type(error).__name__,
            "message": str(error),
        }

    @staticmethod
    def format_error_line(error: Exception) -> str:
        """Single machine-readable stderr line for an error."""
        info = ErrorHandler.describe(error)
        return f"error code={info['error_code']} type={info['type']} message={json.dumps(info['message'])}"

    @staticmethod
    def log_error(error: Exception, context: str = "") -> None:
        """
        Log an error with appropriate level and context.

        Args:
            error: The error to log
            context: Additional context information
        """
        context_str = f" [{context}]" if context else ""

        if isinstance(error, ConfigurationError):
            logger.info(f"Usage error{context_str}: {str(error)}")
        elif isinstance(error, ValidationError):
            logger.error(f"Invalid value{context_str}: {str(error)}")
        elif isinstance(error, NonConvergenceError):
            logger.warning(f"Solver error{context_str}: {str(error)} (residual={error.residual:.3e})")
        elif isinstance(error, ScatterNetError):
            logger.error(f"Error{context_str}: {str(error)}")
        else:
            logger.error(f"Unexpected error{context_str}: {str(error)}", exc_info=True)


def safe_execute(func, *args, **kwargs):
    """
    Safely execute a function and handle any errors.

    Args:
        func: Function to execute
        *args: Positional arguments for the function
        **kwargs: Keyword arguments for the function

    Returns:
        Tuple of (success: bool, result: Any, error: Optional[Exception])
    """
    try:
        result = func(*args, **kwargs)
        return True, result, None
    except Exception as e:
        ErrorHandler.log_error(e, f"safe_execute({func.__name__})")
        return False, None, e
