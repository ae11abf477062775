"""Distribute per-replicate work over processes.

Results always come back in replicate order, so every reduction done on
them afterwards is independent of the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")


def _run_chunk(fn: Callable[[int], T], ids: Sequence[int]) -> list[T]:
    return [fn(r) for r in ids]


def map_replicates(fn: Callable[[int], T], replicate_ids: Sequence[int],
                   workers: int = 1) -> list[T]:
    """``[fn(r) for r in replicate_ids]``, optionally over ``workers`` processes.

    ``fn`` must be picklable when ``workers > 1`` (a module-level function or
    a ``functools.partial`` of one).
    """
    ids = list(replicate_ids)
    if workers is None or workers <= 1 or len(ids) < 2 * max(workers or 1, 1):
        return [fn(r) for r in ids]
    workers = min(workers, os.cpu_count() or 1, len(ids))
    nchunks = workers * 4
    size = -(-len(ids) // nchunks)
    chunks = [ids[i:i + size] for i in range(0, len(ids), size)]
    out: list[T] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(partial(_run_chunk, fn), chunks):
            out.extend(part)
    return out
