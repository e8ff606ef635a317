"""Seed derivation and the thread cap.

Every random stream in the package is a :class:`numpy.random.SeedSequence`
built from ``entropy=master_seed`` and a ``spawn_key`` tuple that names the
stream (a purpose tag followed by indices). Two calls with the same master
seed and key always produce the same stream, independent of which thread runs
them or in what order.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")

# Replicates are generated in fixed-size blocks, one stream per block.
BLOCK_SIZE = 256

# purpose tags for spawn keys
TAG_BOOT = 1
TAG_GAUSS = 2
TAG_DATA = 3
TAG_REP = 4
TAG_DESIGN = 5
TAG_WEIGHTS = 6

_MASK64 = (1 << 64) - 1

# set inside pmap workers so nested pmap calls run serially
_local = threading.local()


def check_seed(seed) -> int:
    s = int(seed)
    if s < 0 or s > _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return s


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream named by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A child 64-bit master seed for the stream named by ``key``."""
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def max_threads() -> int:
    raw = os.environ.get("HDBOOT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def blocks(B: int, size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """Split ``range(B)`` into ``(block_index, start, stop)`` triples."""
    return [(b, s, min(s + size, B)) for b, s in enumerate(range(0, B, size))]


def pmap(fn: Callable[[T], object], items: Iterable[T], threads: int | None = None) -> list:
    """Ordered map, run on up to ``threads`` worker threads."""
    items = list(items)
    n = max_threads() if threads is None else max(1, int(threads))
    if n == 1 or len(items) <= 1 or getattr(_local, "inner", False):
        return [fn(it) for it in items]

    def call(it):
        _local.inner = True
        try:
            return fn(it)
        finally:
            _local.inner = False

    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(call, items))
