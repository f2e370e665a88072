"""Thread-pool helpers shared by the sparse kernels.

Every kernel partitions its *output* into disjoint contiguous ranges, so
workers never write to the same element and the reduction order of each
output entry is independent of the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

ENV_THREADS = "MWULP_THREADS"


def default_workers() -> int:
    value = os.environ.get(ENV_THREADS)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return 1


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        return default_workers()
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return int(workers)


@lru_cache(maxsize=None)
def _pool(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="mwulp")


def balanced_bounds(offsets: np.ndarray, parts: int) -> np.ndarray:
    """Split ``range(len(offsets) - 1)`` into at most ``parts`` chunks of
    roughly equal work, where ``offsets`` is a CSR-style pointer array."""
    nseg = len(offsets) - 1
    if nseg <= 0:
        return np.zeros(1, dtype=np.int64)
    parts = max(1, min(parts, nseg))
    if parts == 1:
        return np.array([0, nseg], dtype=np.int64)
    targets = np.linspace(offsets[0], offsets[-1], parts + 1)
    cuts = np.searchsorted(offsets, targets[1:-1], side="left")
    bounds = np.unique(np.concatenate(([0], cuts, [nseg]))).astype(np.int64)
    return bounds


def even_bounds(n: int, parts: int) -> np.ndarray:
    parts = max(1, min(parts, max(n, 1)))
    if parts == 1:
        return np.array([0, n], dtype=np.int64)
    return np.unique(np.linspace(0, n, parts + 1).astype(np.int64))


def run_ranges(fn: Callable[[int, int], None], bounds: Sequence[int], workers: int) -> None:
    """Call ``fn(lo, hi)`` for consecutive pairs of ``bounds``."""
    pairs = [(int(bounds[i]), int(bounds[i + 1])) for i in range(len(bounds) - 1)]
    pairs = [p for p in pairs if p[1] > p[0]]
    if workers <= 1 or len(pairs) <= 1:
        for lo, hi in pairs:
            fn(lo, hi)
        return
    futures = [_pool(workers).submit(fn, lo, hi) for lo, hi in pairs]
    for f in futures:
        f.result()
