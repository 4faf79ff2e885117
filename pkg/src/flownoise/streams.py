"""Seeded random streams, replica blocks and the jackknife.

All Monte Carlo in the package draws from numpy's PCG64.  Replicas are
grouped into fixed-size blocks; block ``i`` gets the stream spawned from
``SeedSequence(seed)`` with spawn key ``(i,)``.  Because block boundaries do
not depend on the worker count, ``threads=1`` and ``threads=k`` produce the
same samples, and block results are reduced in block order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_BLOCK = 8192
THREADS_ENV = "FLOWNOISE_THREADS"


def seed_sequence(rng) -> np.random.SeedSequence:
    """Accept an int seed, a SeedSequence or a Generator."""
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(2**63)))
    if rng is None:
        raise ValueError("a seed is required; refusing to draw fresh OS entropy")
    return np.random.SeedSequence(int(rng))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(seed_sequence(rng))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def block_sizes(replicas: int, block: int = DEFAULT_BLOCK) -> list[int]:
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    full, rest = divmod(replicas, block)
    return [block] * full + ([rest] if rest else [])


def map_blocks(fn, rng, replicas: int, block: int = DEFAULT_BLOCK, threads: int | None = None):
    """Run ``fn(size, generator)`` on every replica block; results in block order."""
    sizes = block_sizes(replicas, block)
    children = seed_sequence(rng).spawn(len(sizes))
    gens = [np.random.default_rng(c) for c in children]
    threads = resolve_threads(threads)
    if threads == 1 or len(sizes) == 1:
        return [fn(n, g) for n, g in zip(sizes, gens)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, sizes, gens))


def jackknife_mean(x) -> tuple[float, float]:
    """Mean and leave-one-out jackknife standard error of a real sample."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("jackknife needs at least two samples")
    loo = (x.sum() - x) / (n - 1)
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return float(x.mean()), float(se)
