"""
Runtime settings and logging configuration.
"""
import logging
import os
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()


class Settings:
    """Process-wide settings read from the environment."""

    def __init__(self):
        self.log_level = os.getenv("SCATTERNET_LOG_LEVEL", "INFO").upper()
        self.threads = self._read_threads()
        self.solver_method = os.getenv("SCATTERNET_SOLVER", "krylov").lower()
        self.dense_limit = int(os.getenv("SCATTERNET_DENSE_LIMIT", "4096"))

    def _read_threads(self) -> int:
        """Worker cap from SCATTERNET_THREADS, defaulting to the CPU count."""
        raw = os.getenv("SCATTERNET_THREADS")
        if raw:
            try:
                return max(1, int(raw))
            except ValueError:
                logger.warning(f"Ignoring non-integer SCATTERNET_THREADS={raw!r}")
        return os.cpu_count() or 1

    def set_threads(self, threads: Optional[int]) -> None:
        """Override the worker cap (CLI --threads)."""
        if threads is not None:
            self.threads = max(1, int(threads))


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Return the global settings instance."""
    return settings


def configure_logging(level: Optional[str] = None) -> None:
    """Send log records to stderr at the requested level."""
    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
