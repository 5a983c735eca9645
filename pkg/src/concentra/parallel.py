"""Deterministic block-parallel Monte Carlo.

A sample of size N is cut into blocks whose size depends only on N and the
dimension.  Block i always draws from ``task.child(i)``, so the numbers, and
their order after concatenation, do not depend on how many threads run them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from .samplers import RngStream

BLOCK_ELEMS = 1 << 20
MIN_BLOCK_ROWS = 256

_threads_override: int | None = None


def default_threads() -> int:
    if _threads_override is not None:
        return _threads_override
    env = os.environ.get("CONCENTRA_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def set_threads(n: int | None) -> None:
    """Process-wide worker count used when a call does not pass ``threads``."""
    global _threads_override
    _threads_override = None if n is None else max(1, int(n))


def ordered_map(fn: Callable, items: Iterable, threads: int | None = None) -> list:
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def block_sizes(total: int, dim: int) -> list[int]:
    rows = max(MIN_BLOCK_ROWS, BLOCK_ELEMS // max(1, dim))
    full, rest = divmod(int(total), rows)
    return [rows] * full + ([rest] if rest else [])


def map_blocks(
    draw: Callable[[RngStream, int], np.ndarray],
    total: int,
    dim: int,
    rng: RngStream,
    threads: int | None = None,
) -> np.ndarray:
    """Concatenate ``draw(stream_i, size_i)`` over the blocks of a task.

    The task stream is spawned from ``rng`` so consecutive calls with the same
    parent see fresh, reproducible randomness.
    """
    task = rng.spawn()
    sizes = block_sizes(total, dim)
    jobs: Sequence[tuple[int, int]] = list(enumerate(sizes))
    parts = ordered_map(lambda job: np.asarray(draw(task.child(job[0]), job[1])), jobs, threads)
    return np.concatenate(parts, axis=0) if parts else np.empty(0)
