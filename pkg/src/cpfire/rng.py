"""
Seeding contract.

Every random stream is a ``numpy.random.Generator`` over PCG64. Replicate
``r`` of a run with base seed ``b`` is seeded with ``replicate_seed(b, r)``,
the SplitMix64 output function applied to ``b + (r + 1) * 0x9E3779B97F4A7C15``
(mod 2**64), so the mapping does not depend on scheduling or worker count.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replicate_seed(base_seed: int, replicate: int) -> int:
    if base_seed < 0 or replicate < 0:
        raise ValueError("seeds and replicate indices are non-negative")
    return splitmix64(int(base_seed) + (int(replicate) + 1) * GOLDEN_GAMMA)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def replicate_rng(base_seed: int, replicate: int) -> np.random.Generator:
    return make_rng(replicate_seed(base_seed, replicate))
