from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from src.config import settings

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item, possibly on a thread pool, keeping input order.

    Args:
        fn: Function to apply
        items: Inputs
        threads: Worker count (defaults to settings.thread_count)

    Returns:
        List of results in the order of ``items``
    """
    items = list(items)
    workers = settings.thread_count if threads is None else max(1, int(threads))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
