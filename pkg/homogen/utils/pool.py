import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from homogen.config.settings import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def map_parallel(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Ordered map over independent work items, threaded when MAX_WORKERS > 1."""
    items = list(items)
    if settings.MAX_WORKERS > 1 and len(items) > 1:
        logger.debug(f"Dispatching {len(items)} items to {settings.MAX_WORKERS} workers")
        with ThreadPoolExecutor(max_workers=settings.MAX_WORKERS) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]
