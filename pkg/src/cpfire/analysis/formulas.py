"""Closed-form probabilities used in the block and source constructions."""
from __future__ import annotations

import math

from ..errors import ConfigError


def block_unaffected_prob(delta0: float, F: float, L: float, n: float, T: float) -> float:
    """Probability that no fire touches the space-time box of a block event.

    A fire reaches ``[-L-2n, L+2n]^2`` only if its centre lies in a square of
    side ``F + 2L + 4n + 1``; over ``[0, T+1]`` that is a Poisson count with
    mean ``delta0 * tau``.
    """
    for name, v in (("delta0", delta0), ("F", F), ("L", L), ("n", n), ("T", T)):
        if v < 0:
            raise ConfigError(f"{name} must be >= 0, got {v}")
    if math.isinf(delta0):
        return 0.0
    tau = (F + 2 * L + 4 * n + 1) ** 2 * (T + 1)
    return math.exp(-delta0 * tau)


def fire_gap_probability(delta0: float, W: float, F: float, T: float) -> float:
    """(1 - exp(-delta0 (W-F)^2 T/2)) * exp(-14 delta0 F^2 T)."""
    if not W >= F >= 0:
        raise ConfigError(f"need W >= F >= 0, got W={W}, F={F}")
    if delta0 < 0 or T < 0:
        raise ConfigError("delta0 and T must be >= 0")
    return -math.expm1(-delta0 * (W - F) ** 2 * T / 2) * math.exp(-14 * delta0 * F**2 * T)


def spread_rate(c2: float, beta1: float, k: float, W: float, rho: float, L: float) -> float:
    """Minimum rate of long-range births from a source into a target of L^2 sites at distance 4kW."""
    return c2 * beta1 * (4 * k * W) ** (-rho) * L**2


def spread_success_bound(c2: float, beta1: float, k: float, W: float, rho: float, L: float,
                         T: float) -> float:
    """1 - exp(-u T / 2) with u from :func:`spread_rate`."""
    for name, v in (("c2", c2), ("beta1", beta1), ("k", k), ("W", W), ("L", L)):
        if not v > 0:
            raise ConfigError(f"{name} must be > 0, got {v}")
    if T < 0:
        raise ConfigError(f"T must be >= 0, got {T}")
    if math.isinf(c2):
        return 1.0
    return -math.expm1(-spread_rate(c2, beta1, k, W, rho, L) * T / 2)
