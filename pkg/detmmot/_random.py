"""
Seeded random streams and the fixed-size chunking shared by all samplers.

Every stochastic function takes an explicit seed (an ``int`` or a
:class:`numpy.random.SeedSequence`). Work is cut into chunks of
``CHUNK_SIZE`` draws and chunk ``k`` draws from the stream with spawn key
``(..., k)``, so results depend on the seed and ``n`` only, never on how many
workers ran the chunks.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar, Union

import numpy as np

from ._errors import ContractViolation

__all__ = [
    "RngState",
    "DEFAULT_SEED",
    "CHUNK_SIZE",
    "THREADS_ENV",
    "as_seed_sequence",
    "child_sequence",
    "generator",
    "as_generator",
    "worker_count",
    "chunk_sizes",
    "map_chunks",
]

log = logging.getLogger(__name__)

RngState = Union[int, np.random.SeedSequence]

DEFAULT_SEED = 0xC0FFEE
CHUNK_SIZE = 1 << 16
THREADS_ENV = "DETMMOT_THREADS"

T = TypeVar("T")


def as_seed_sequence(rng: RngState) -> np.random.SeedSequence:
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, (int, np.integer)) and not isinstance(rng, bool):
        if rng < 0:
            raise ContractViolation(f"Seed must be non-negative, got {rng}")
        return np.random.SeedSequence(int(rng))
    raise ContractViolation(f"Expected an int seed or SeedSequence, got {type(rng)}")


def child_sequence(seq: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """
    Derive the stream at ``seq.spawn_key + key`` without touching the spawn counter.
    """
    return np.random.SeedSequence(
        entropy=seq.entropy,
        spawn_key=tuple(seq.spawn_key) + tuple(key),
        pool_size=seq.pool_size,
    )


def generator(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng: Union[np.random.Generator, RngState]) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return generator(as_seed_sequence(rng))


def worker_count() -> int:
    available = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return available
    try:
        cap = int(raw)
    except ValueError:
        raise ContractViolation(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if cap < 1:
        raise ContractViolation(f"{THREADS_ENV} must be at least 1, got {cap}")
    return min(cap, available)


def chunk_sizes(n: int, chunk_size: int = CHUNK_SIZE) -> List[int]:
    if n < 0:
        raise ContractViolation(f"Sample count must be non-negative, got {n}")
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(
    fn: Callable[[int, int], T], n: int, chunk_size: int = CHUNK_SIZE
) -> List[T]:
    """
    Call ``fn(index, size)`` for every chunk and return the results in chunk order.
    """
    sizes = chunk_sizes(n, chunk_size)
    workers = min(worker_count(), len(sizes))
    if workers <= 1:
        return [fn(i, size) for i, size in enumerate(sizes)]
    log.debug("running %d chunks on %d workers", len(sizes), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))
