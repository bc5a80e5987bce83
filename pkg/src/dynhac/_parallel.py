"""Replication-parallel execution with order-independent reduction.

Workers map a replication index range [start, stop) to a dict of arrays
whose trailing axis indexes the replication. Chunks are assigned by index
and re-assembled in index order, so results are bitwise identical for any
worker count, including 1.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

_MIN_CHUNK = 32


def _call(payload):
    worker, start, stop, args = payload
    return worker(start, stop, *args)


def map_replications(worker, n_items: int, threads: int, args: tuple) -> dict:
    """Run ``worker(start, stop, *args)`` over [0, n_items) in chunks.

    ``worker`` must be a module-level function returning a dict of ndarrays
    with the replication index on the last axis.
    """
    if threads <= 1 or n_items <= _MIN_CHUNK:
        return worker(0, n_items, *args)
    chunk = max(_MIN_CHUNK, math.ceil(n_items / (threads * 4)))
    spans = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    if len(spans) == 1:
        return worker(0, n_items, *args)
    payloads = [(worker, s, e, args) for s, e in spans]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_call, payloads))
    return {
        key: np.concatenate([p[key] for p in parts], axis=-1) for key in parts[0]
    }
