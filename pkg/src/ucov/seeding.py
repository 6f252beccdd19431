"""Deterministic stream derivation and replication fan-out.

All randomness in the package flows through numpy's PCG64 generator keyed
by a SeedSequence built from integer tuples.  Child streams are derived
from (master seed, index, ...) keys, never from generator state, so every
replication sees the same stream no matter how work is split across
processes.  Reductions are assembled by replication index, which makes
experiment output byte-identical for any worker count.
"""
from __future__ import annotations

import multiprocessing

import numpy as np

# Fixed vectorization block for large Monte Carlo loops.  Chunk k of a
# loop always covers indices [k*CHUNK, (k+1)*CHUNK) and always draws from
# the stream keyed (seed, k), so totals are independent of scheduling.
CHUNK = 8192


def rng_for(*keys: int) -> np.random.Generator:
    """Return the PCG64 generator keyed by an integer tuple."""
    return np.random.default_rng(np.random.SeedSequence(list(keys)))


def child_seed(*keys: int) -> int:
    """Collapse a key tuple to a single integer seed (stable across runs)."""
    state = np.random.SeedSequence(list(keys)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def chunk_ranges(total: int, size: int = CHUNK):
    """Yield (chunk_index, start, stop) covering range(total)."""
    for k, start in enumerate(range(0, total, size)):
        yield k, start, min(start + size, total)


def fanout(total: int, job, workers: int = 1, pieces_per_worker: int = 4) -> np.ndarray:
    """Run job(start, stop) over a partition of range(total) and stack results.

    job must be a picklable callable returning a 2-d array with stop-start
    rows whose content depends only on the indices it is given.  Output is
    assembled in index order, so the result is identical for any worker
    count and any partition.
    """
    if total <= 0:
        return np.empty((0, 0))
    workers = max(1, int(workers))
    if workers == 1:
        return np.vstack([job(0, total)])
    n_pieces = min(total, workers * pieces_per_worker)
    bounds = np.linspace(0, total, n_pieces + 1).astype(int)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with multiprocessing.Pool(processes=workers) as pool:
        blocks = pool.starmap(job, spans)
    return np.vstack(blocks)
