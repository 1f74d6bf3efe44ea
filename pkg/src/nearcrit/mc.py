"""Deterministic chunked Monte Carlo orchestration.

Samples are indexed globally; sample i always uses the coupling field
keyed by (master_seed, i), and work is split into fixed-size chunks whose
boundaries do not depend on the worker count.  Workers return per-sample
record arrays which are concatenated in chunk order, so results are
bit-identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

CHUNK = 512

_worker_fn = None


def _init_worker(fn):
    global _worker_fn
    _worker_fn = fn


def _run_chunk(args):
    return _worker_fn(*args)


def map_chunks(fn, common_args: tuple, n_samples: int, workers: int = 1,
               chunk: int = CHUNK) -> list:
    """Evaluate fn(*common_args, lo, hi) over fixed chunks of [0, n_samples).

    Returns the per-chunk results in chunk order.  fn must be a module-level
    function (picklable) mapping a sample range to arrays of per-sample
    records; it must derive all randomness from the global sample index.
    """
    ranges = [(lo, min(lo + chunk, n_samples)) for lo in range(0, n_samples, chunk)]
    if workers <= 1 or len(ranges) <= 1:
        return [fn(*common_args, lo, hi) for lo, hi in ranges]
    tasks = [common_args + r for r in ranges]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(fn,)) as pool:
        return list(pool.map(_run_chunk, tasks, chunksize=1))


def default_workers() -> int:
    env = os.environ.get("NEARCRIT_WORKERS")
    if env:
        return max(1, int(env))
    return 1
