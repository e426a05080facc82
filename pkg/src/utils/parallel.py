"""Chunked data-parallel execution over dataset rows"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple, TypeVar

from .config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")


def chunk_bounds(num_rows: int, chunk_size: Optional[int] = None) -> List[Tuple[int, int]]:
    """Split ``range(num_rows)`` into consecutive ``[start, end)`` chunks"""
    size = chunk_size or get_settings().chunk_size
    return [(start, min(start + size, num_rows)) for start in range(0, num_rows, size)]


def map_chunks(
    func: Callable[[int, int], T],
    num_rows: int,
    chunk_size: Optional[int] = None,
    num_threads: Optional[int] = None,
) -> List[T]:
    """
    Apply ``func(start, end)`` to every row chunk.

    Results come back in chunk order regardless of which thread finished
    first, so reductions over them are deterministic.

    Args:
        func: Work function over a row range
        num_rows: Total number of rows
        chunk_size: Rows per chunk (default from settings)
        num_threads: Worker threads (default from settings)

    Returns:
        One result per chunk, in chunk order
    """
    bounds = chunk_bounds(num_rows, chunk_size)
    threads = num_threads or get_settings().num_threads
    if threads <= 1 or len(bounds) <= 1:
        return [func(start, end) for start, end in bounds]
    logger.debug(f"Running {len(bounds)} chunks on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: func(*b), bounds))
