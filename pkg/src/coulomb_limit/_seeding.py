"""Deterministic seeding and schedule-independent parallel maps."""
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def rng_for(seed, *key):
    """Generator for the stream identified by ``(seed, *key)``.

    Streams with different keys are statistically independent, and the
    stream for a given key never depends on how many other streams exist,
    so work can be split into blocks and run in any order.
    """
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    )


def ordered_map(fn, items, threads=1):
    """``[fn(x) for x in items]`` optionally on a thread pool.

    Results come back in input order whatever the thread count.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, items))


def blocks(n, size):
    """Split ``range(n)`` into consecutive ``(start, stop)`` blocks."""
    return [(i, min(i + size, n)) for i in range(0, n, size)]
