from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map over chunks with up to ``threads`` workers; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def chunk_ranges(lo: int, hi: int, n_chunks: int) -> list[tuple[int, int]]:
    """Split the closed range [lo, hi] into at most ``n_chunks`` ascending pieces."""
    if hi < lo:
        return []
    n_chunks = max(1, min(n_chunks, hi - lo + 1))
    step = -(-(hi - lo + 1) // n_chunks)
    return [(a, min(a + step - 1, hi)) for a in range(lo, hi + 1, step)]
