"""Worker-pool plumbing for the per-sample loops.

All parallel units are pure functions over read-only shared inputs, so the
output is independent of the worker count; ``parallel_map`` preserves input
order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

THREADS_ENV_VAR = "FACTORALIGN_THREADS"

_T = TypeVar("_T")
_R = TypeVar("_R")


def resolve_threads(threads: int | None) -> int:
    """Resolve a worker count: explicit flag wins, then the env var, then auto.

    A value of 0 means auto (one worker per CPU).
    """
    if threads is None:
        env = os.environ.get(THREADS_ENV_VAR)
        threads = int(env) if env else 0
    if threads < 0:
        raise ValueError("thread count must be >= 0")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def parallel_map(fn: Callable[[_T], _R], items: Sequence[_T] | Iterable[_T], threads: int) -> list[_R]:
    """Map ``fn`` over ``items`` preserving order, optionally on a thread pool."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
