"""Deterministic parallel map over independent work items.

Results are assembled in input order, so the output never depends on
scheduling. Worker count is capped by the GTSA_THREADS environment
variable: 0 means all cores, unset means serial (CPython threads rarely
pay off for the pure-Python inner loops here, so parallelism is opt-in).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    raw = os.environ.get("GTSA_THREADS")
    if raw is None:
        return 1
    n = int(raw)
    if n == 0:
        return os.cpu_count() or 1
    return max(1, n)


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Apply fn to each item; results in input order regardless of workers."""
    seq: Sequence[T] = list(items)
    workers = worker_count()
    if workers == 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq))
