"""
Ordered worker-pool helpers.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from scatternet.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """
    Apply func to every item, results in input order.

    Args:
        func: Work function; must not mutate shared state
        items: Work items
        threads: Worker cap, defaults to the configured thread count

    Returns:
        List of results aligned with items
    """
    items = list(items)
    workers = min(threads or get_settings().threads, len(items))
    if workers <= 1:
        return [func(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
