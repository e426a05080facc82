"""Caching utilities for derived circuit tables"""

import functools
import threading
from typing import Any, Callable, Optional

from cachetools import LRUCache


class Cache:
    """
    Thread-safe LRU cache with a size limit.
    """

    def __init__(self, maxsize: int = 64):
        """
        Initialize cache.

        Args:
            maxsize: Maximum number of items in cache
        """
        self._cache: LRUCache = LRUCache(maxsize=maxsize)
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[Any]:
        """
        Get value from cache.

        Args:
            key: Cache key

        Returns:
            Cached value or None if not found
        """
        with self._lock:
            return self._cache.get(key)

    def set(self, key: str, value: Any) -> None:
        with self._lock:
            self._cache[key] = value

    def delete(self, key: str) -> None:
        with self._lock:
            self._cache.pop(key, None)

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()

    def size(self) -> int:
        return len(self._cache)


def cached(cache: Cache, key_func: Callable[..., str]):
    """
    Decorator memoizing a function's result in ``cache``.

    Args:
        cache: Cache instance to use
        key_func: Function building the cache key from the call arguments

    Example:
        @cached(tables, key_func=lambda circuit: circuit.digest)
        def sampling_tables(circuit):
            ...
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            cache_key = f"{func.__name__}:{key_func(*args, **kwargs)}"
            cached_value = cache.get(cache_key)
            if cached_value is not None:
                return cached_value
            result = func(*args, **kwargs)
            cache.set(cache_key, result)
            return result

        return wrapper

    return decorator
