"""
Fast-flip limit: the 2's of the flip variant against a contact process with
the averaged birth rate gamma = beta2 * delta1 / (beta1 + delta1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..engine import Observers, ProcessParams, Stop, run_until
from ..errors import ConfigError
from ..kernels import KernelTable, moore_kernel
from ..lattice import new_lattice
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Z95, Estimate


@dataclass
class FlipLimitPoint:
    delta1: float
    gamma: float
    gap: Estimate
    times: NDArray[np.float64]
    density_flip: NDArray[np.float64]
    density_contact: NDArray[np.float64]


def _avg_gap(a: NDArray, b: NDArray, times: NDArray) -> float:
    return float(np.trapezoid(np.abs(a - b), times) / (times[-1] - times[0]))


def _type2_path(seed: int, params: ProcessParams, size: int, times: NDArray[np.float64]) -> NDArray:
    lat = new_lattice(size, size, "torus", 2)
    traj = run_until(lat, params, Stop(float(times[-1])), make_rng(seed), Observers(sample_times=times))
    out = np.zeros(len(times))
    out[: len(traj.n2)] = traj.n2
    return out / (size * size)


def _paired(seed: int, flip: ProcessParams, contact: ProcessParams, size: int,
            times: NDArray[np.float64]) -> tuple[NDArray, NDArray]:
    return _type2_path(seed, flip, size, times), _type2_path(seed, contact, size, times)


def flip_limit_gap(ratio: float, delta1_values, beta2: float, delta2: float = 1.0,
                   kernel2: KernelTable | None = None, *, size: int = 64, t_max: float = 50.0,
                   samples: int = 51, replicates: int = 200, base_seed: int = 0,
                   bootstrap: int = 500, workers: int = 1) -> list[FlipLimitPoint]:
    """Time-averaged |density of 2's (flip variant) - density (contact, gamma)| for each delta1.

    ``ratio`` = beta1/delta1 is held fixed. Both processes start from all 2's
    on a torus. The gap is the time average of |mean path (flip) - mean path
    (contact)|, the means taken over replicates; its standard error comes
    from a bootstrap over replicates.
    """
    if ratio <= 0 or beta2 < 0 or delta2 <= 0:
        raise ConfigError("need beta1/delta1 > 0, beta2 >= 0 and delta2 > 0")
    k2 = kernel2 or moore_kernel()
    times = np.linspace(0.0, t_max, samples)
    points = []
    for d1 in delta1_values:
        d1 = float(d1)
        gamma = beta2 / (1.0 + ratio)
        flip = ProcessParams(beta1=ratio * d1, beta2=beta2, delta1=d1, delta2=delta2, kernel2=k2, flip=True)
        contact = ProcessParams(beta2=gamma, delta2=delta2, kernel2=k2)
        res = run_replicates(_paired, base_seed, replicates, flip, contact, size, times, workers=workers)
        zf = np.array([r[0] for r in res])
        cp = np.array([r[1] for r in res])
        value = _avg_gap(zf.mean(axis=0), cp.mean(axis=0), times)
        boot_rng = make_rng(base_seed)
        boots = []
        for _ in range(bootstrap):
            i = boot_rng.integers(0, replicates, replicates)
            j = boot_rng.integers(0, replicates, replicates)
            boots.append(_avg_gap(zf[i].mean(axis=0), cp[j].mean(axis=0), times))
        se = float(np.std(boots, ddof=1))
        gap = Estimate(value, replicates, (value - Z95 * se, value + Z95 * se), "flip-limit-gap",
                       base_seed, stderr=se, extra={"delta1": d1, "ratio": ratio, "gamma": gamma})
        points.append(FlipLimitPoint(d1, gamma, gap, times, zf.mean(axis=0), cp.mean(axis=0)))
    return points
