"""
Critical value of beta/delta for a single-type contact process.

Both indicators compare a decay over the time window [T/q, T] with the
critical power law of directed percolation in 2+1 dimensions, whose density
decay and survival exponents coincide (0.4505):

* ``density-decay``: mean density from a full lattice, rho(T) / rho(T/q);
* ``survival-crossing``: single-seed survival, P(tau > T) / P(tau > T/q).

A ratio above ``q ** -0.4505`` marks the probe as supercritical; bisection
on lambda = beta/delta then brackets the crossing.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..engine import Observers, ProcessParams, Stop, run_until
from ..errors import BracketError, ConfigError
from ..kernels import KernelTable
from ..lattice import new_lattice
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Estimate

DP_EXPONENT = 0.4505
METHODS = ("survival-crossing", "density-decay")


@dataclass(frozen=True)
class LambdaScales:
    size: int = 128
    t_max: float = 800.0
    ratio: float = 4.0
    decay_replicates: int = 4
    survival_replicates: int = 4000
    lam_lo: float = 1.3
    lam_hi: float = 1.7
    rel_tol: float = 0.004
    max_iter: int = 20

    def __post_init__(self):
        if self.size < 8 or self.t_max <= 0 or self.ratio <= 1:
            raise ConfigError("need size >= 8, t_max > 0 and ratio > 1")
        if not 0 < self.lam_lo < self.lam_hi:
            raise ConfigError("need 0 < lam_lo < lam_hi")


def _decay_run(seed: int, kernel: KernelTable, lam: float, sc: LambdaScales) -> tuple[float, float]:
    lat = new_lattice(sc.size, sc.size, "torus", 1)
    params = ProcessParams(beta1=lam, delta1=1.0, kernel1=kernel)
    t1 = sc.t_max / sc.ratio
    traj = run_until(lat, params, Stop(sc.t_max), make_rng(seed), Observers(sample_times=[t1, sc.t_max]))
    n1 = np.zeros(2)
    n1[: len(traj.n1)] = traj.n1
    return float(n1[0]), float(n1[1])


def _survival_run(seed: int, kernel: KernelTable, lam: float, sc: LambdaScales) -> float:
    """Extinction time of a single seed (inf if alive or capped at T)."""
    lat = new_lattice(sc.size, sc.size, "torus", {(sc.size // 2, sc.size // 2): 1})
    params = ProcessParams(beta1=lam, delta1=1.0, kernel1=kernel)
    cap = sc.size * sc.size // 16
    traj = run_until(lat, params, Stop(sc.t_max, "type1-extinct", cap=cap), make_rng(seed))
    tau = traj.extinction[1]
    return math.inf if tau is None else tau


def decay_ratio(kernel: KernelTable, lam: float, method: str, scales: LambdaScales,
                base_seed: int = 0, workers: int = 1) -> float:
    """The method's late-time decay ratio at lambda = ``lam`` (0 when already extinct)."""
    t1 = scales.t_max / scales.ratio
    if method == "density-decay":
        res = run_replicates(_decay_run, base_seed, scales.decay_replicates, kernel, lam, scales,
                             workers=workers)
        early = sum(r[0] for r in res)
        late = sum(r[1] for r in res)
    elif method == "survival-crossing":
        taus = np.array(run_replicates(_survival_run, base_seed, scales.survival_replicates, kernel,
                                       lam, scales, workers=workers))
        early = float(np.sum(taus > t1))
        late = float(np.sum(taus > scales.t_max))
    else:
        raise ConfigError(f"unknown method {method!r}; use one of {METHODS}")
    return late / early if early > 0 else 0.0


def is_supercritical(kernel: KernelTable, lam: float, method: str, scales: LambdaScales,
                     base_seed: int = 0, workers: int = 1) -> bool:
    return decay_ratio(kernel, lam, method, scales, base_seed, workers) > scales.ratio ** (-DP_EXPONENT)


def estimate_lambda_c(kernel: KernelTable, method: str = "density-decay",
                      scales: LambdaScales | None = None, base_seed: int = 0,
                      workers: int = 1) -> Estimate:
    """Bisect lambda = beta/delta between ``scales.lam_lo`` and ``scales.lam_hi``.

    Each probe reuses the same replicate seeds. The interval reported is the
    final bracket. Raises BracketError if the end points do not straddle the
    transition.
    """
    sc = scales or LambdaScales()
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; use one of {METHODS}")
    target = sc.ratio ** (-DP_EXPONENT)
    history = []

    def probe(lam):
        r = decay_ratio(kernel, lam, method, sc, base_seed, workers)
        history.append((lam, r))
        return r > target

    lo, hi = sc.lam_lo, sc.lam_hi
    if probe(lo):
        raise BracketError(f"lambda = {lo} already looks supercritical ({method})")
    if not probe(hi):
        raise BracketError(f"lambda = {hi} still looks subcritical ({method})")
    for _ in range(sc.max_iter):
        if (hi - lo) / (0.5 * (hi + lo)) < sc.rel_tol:
            break
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    value = 0.5 * (lo + hi)
    return Estimate(value, len(history), (lo, hi), method, base_seed,
                    stderr=(hi - lo) / 2,
                    extra={"probes": history, "target_ratio": target, "scales": asdict(sc)})
