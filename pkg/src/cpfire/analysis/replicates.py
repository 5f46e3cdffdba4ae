"""Seed-isolated replicate dispatch."""
from __future__ import annotations

import os
from typing import Any, Callable

from joblib import Parallel, delayed

from ..rng import replicate_seed


def default_workers() -> int:
    return max(os.cpu_count() or 1, 1)


def run_replicates(func: Callable[..., Any], base_seed: int, n: int, *args,
                   workers: int = 1, start: int = 0, **kwargs) -> list[Any]:
    """Call ``func(seed, *args, **kwargs)`` for replicates start..start+n-1.

    Seeds come from :func:`cpfire.rng.replicate_seed`, so results do not depend
    on ``workers``. Results are returned in replicate order.
    """
    seeds = [replicate_seed(base_seed, r) for r in range(start, start + n)]
    if workers <= 1 or n <= 1:
        return [func(s, *args, **kwargs) for s in seeds]
    return Parallel(n_jobs=workers)(delayed(func)(s, *args, **kwargs) for s in seeds)
