"""Monte Carlo estimates and their confidence intervals."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

Z95 = float(stats.norm.ppf(0.975))


@dataclass(frozen=True)
class Estimate:
    """A point estimate with a 95% interval.

    ``replicates == 0`` marks an undefined estimate (e.g. a conditional
    probability whose conditioning event never occurred); ``value`` is NaN
    and the interval is the trivial one.
    """

    value: float
    replicates: int
    ci95: tuple[float, float]
    method: str
    base_seed: int | None = None
    successes: int | None = None
    stderr: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        """Standard error; binomial for proportions."""
        if self.stderr is not None:
            return self.stderr
        if self.replicates == 0:
            return math.nan
        p = self.value
        return math.sqrt(max(p * (1 - p), 0.0) / self.replicates)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        d["sigma"] = self.sigma
        return d


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # keep p inside the interval despite rounding at k in {0, n}
    return min(max(centre - half, 0.0), p), max(min(centre + half, 1.0), p)


def proportion(k: int, n: int, method: str, base_seed: int | None = None, /, **extra) -> Estimate:
    if n == 0:
        return Estimate(math.nan, 0, (0.0, 1.0), method, base_seed, 0, extra=extra)
    return Estimate(k / n, n, wilson_interval(k, n), method, base_seed, int(k), extra=extra)


def mean_estimate(samples: Sequence[float], method: str, base_seed: int | None = None, /, **extra) -> Estimate:
    x = np.asarray(samples, dtype=float)
    n = len(x)
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(m, n, (m - Z95 * se, m + Z95 * se), method, base_seed, stderr=se, extra=extra)


def merge_proportions(parts: Sequence[Estimate]) -> Estimate:
    """Pool replicate batches; order-independent."""
    k = sum(p.successes or 0 for p in parts)
    n = sum(p.replicates for p in parts)
    methods = {p.method for p in parts}
    seeds = {p.base_seed for p in parts}
    return proportion(k, n, methods.pop() if len(methods) == 1 else "pooled",
                      seeds.pop() if len(seeds) == 1 else None)


def z_score(observed: float, expected: float, sigma: float) -> float:
    if sigma == 0:
        return 0.0 if observed == expected else math.inf
    return (observed - expected) / sigma
