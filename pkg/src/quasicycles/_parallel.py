"""Chunked evaluation with results independent of the worker count.

Work is always split into the same fixed-size chunks; the thread count only
changes how the chunks are scheduled. Results are concatenated in chunk order,
so every downstream reduction sees identical arrays.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 4096

_threads = 1


def set_threads(n):
    global _threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = int(n)


def get_threads():
    return _threads


def map_chunks(fn, n_items, chunk=CHUNK):
    """Apply ``fn(start, stop) -> ndarray`` over fixed chunks and concatenate."""
    bounds = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    if not bounds:
        return fn(0, 0)
    if _threads == 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=_threads) as pool:
            parts = list(pool.map(lambda ab: fn(*ab), bounds))
    return np.concatenate(parts)
