"""
Phase timing reported on stderr through logging.
"""
import logging
import time
from contextlib import contextmanager
from typing import Dict, Iterator

logger = logging.getLogger(__name__)


@contextmanager
def timed_phase(name: str) -> Iterator[Dict[str, float]]:
    """Time a block and log `phase=<name> seconds=<t>`; the dict receives `seconds`."""
    record: Dict[str, float] = {}
    start = time.perf_counter()
    try:
        yield record
    finally:
        record["seconds"] = time.perf_counter() - start
        logger.info(f"phase={name} seconds={record['seconds']:.3f}")
