"""
Finite-size block events of the contact process, and Monte Carlo checks of
the closed-form fire and spread probabilities.

Block geometry: the process lives in the box ``[-R, R]^2`` with
``R = L + 2n`` (births outside are discarded) and starts from ``[-n, n]^2``
fully occupied. Grid coordinate ``g = x + R``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from ..engine import Observers, ProcessParams, Stop, Watch, run_until
from ..errors import ConfigError
from ..kernels import KernelTable, build_power_kernel, moore_kernel
from ..lattice import new_lattice
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Estimate, proportion


@dataclass(frozen=True)
class BlockCriterionConfig:
    n: int
    L: int
    T: float
    eps: float = 0.1

    def __post_init__(self):
        if self.n < 1 or self.L < 1 or not self.T > 0:
            raise ConfigError(f"need n, L >= 1 and T > 0, got n={self.n}, L={self.L}, T={self.T}")

    @property
    def half_width(self) -> int:
        return self.L + 2 * self.n


def full_squares(occupied: NDArray[np.bool_], n: int) -> NDArray[np.bool_]:
    """Boolean map over centres (cy, cx) whose square ``[-n, n]^2`` is fully occupied.

    Output has shape ``(H - 2n, W - 2n)``; entry ``[i, j]`` is the square
    centred at grid ``(j + n, i + n)``.
    """
    side = 2 * n + 1
    c = np.zeros((occupied.shape[0] + 1, occupied.shape[1] + 1), dtype=np.int64)
    c[1:, 1:] = np.cumsum(np.cumsum(occupied, axis=0), axis=1)
    sums = c[side:, side:] - c[:-side, side:] - c[side:, :-side] + c[:-side, :-side]
    return sums == side * side


def _block_replicate(seed: int, cfg: BlockCriterionConfig, params: ProcessParams) -> tuple[bool, bool]:
    n, L, R = cfg.n, cfg.L, cfg.half_width
    side = 2 * R + 1
    arr = np.zeros((side, side), dtype=np.int8)
    arr[R - n: R + n + 1, R - n: R + n + 1] = 1
    lat = new_lattice(side, side, "box", arr)
    mask = np.zeros((side, side), dtype=np.int8)
    mask[R: R + L + 1, R + L + n] = 1  # centres {L+n} x [0, L]
    watch = Watch(1, n, mask.reshape(-1), (1.0, cfg.T + 1.0))
    run_until(lat, params, Stop(cfg.T + 1.0), make_rng(seed), watch=watch)
    full = full_squares(lat.array() == 1, n)
    # centres x in [0, L]^2 -> grid R..R+L -> full[] index R-n..R+L-n
    top = bool(full[R - n: R + L - n + 1, R - n: R + L - n + 1].any())
    side_event = watch.found < cfg.T + 1.0
    return top, side_event


def block_event_prob(config: BlockCriterionConfig, beta: float, delta: float = 1.0,
                     delta0: float = 0.0, F: int = 1, replicates: int = 200,
                     base_seed: int = 0, kernel: KernelTable | None = None,
                     workers: int = 1) -> tuple[Estimate, Estimate]:
    """Probabilities of the two block events of the survival criterion.

    First: at time T+1 some ``x + [-n, n]^2`` with ``x in [0, L]^2`` is fully
    occupied. Second: for some ``t in [0, T)`` the state at ``t + 1`` has a
    fully occupied ``x + [-n, n]^2`` with ``x in {L+n} x [0, L]``; checked at
    the opening of the window and at every birth inside it, which is exact.
    """
    params = ProcessParams(beta1=beta, delta1=delta, delta0=delta0, F=F,
                           kernel1=kernel or moore_kernel())
    res = run_replicates(_block_replicate, base_seed, replicates, config, params, workers=workers)
    top = sum(r[0] for r in res)
    side = sum(r[1] for r in res)
    info = {"config": asdict(config), "beta": beta, "delta": delta, "delta0": delta0, "F": F}
    return (proportion(top, replicates, "block-top", base_seed, **info),
            proportion(side, replicates, "block-side", base_seed, **info))


# ---------------------------------------------------------------------------
# fire-only Monte Carlo for the closed forms


def _fire_avoid_replicate(seed: int, delta0: float, F: int, L: int, n: int, T: float) -> bool:
    R = L + 2 * n
    r = F // 2
    block = 2 * R + 1
    size = block + 2 * r + 2  # no fire can touch the block from two sides at once
    arr = np.zeros((size, size), dtype=np.int8)
    arr[:block, :block] = 1
    lat = new_lattice(size, size, "torus", arr)
    params = ProcessParams(delta0=delta0, F=F)
    run_until(lat, params, Stop(T + 1.0, "type1-extinct", cap=0), make_rng(seed))
    return lat.n1 == block * block


def fire_avoidance_mc(delta0: float, F: int, L: int, n: int, T: float, replicates: int = 10_000,
                      base_seed: int = 0, workers: int = 1) -> Estimate:
    """Frequency with which no fire touches a full ``[-L-2n, L+2n]^2`` block during [0, T+1].

    Only fire clocks run. For even ``F`` the exact value is
    ``block_unaffected_prob(delta0, F, L, n, T)``.
    """
    res = run_replicates(_fire_avoid_replicate, base_seed, replicates, delta0, F, L, n, T,
                         workers=workers)
    return proportion(sum(res), replicates, "fire-avoidance", base_seed,
                      delta0=delta0, F=F, L=L, n=n, T=T)


def _fire_gap_replicate(seed: int, delta0: float, F: int, W: int, T: float) -> bool:
    r = F // 2
    size = W + 4 * r + 2
    lat = new_lattice(size, size, "torus")
    params = ProcessParams(delta0=delta0, F=F)
    expected = size * size * delta0 * 4 * T
    cap = int(expected + 20 * math.sqrt(expected) + 64)
    traj = run_until(lat, params, Stop(4.0 * T), make_rng(seed), Observers(log_capacity=cap))
    if traj.events_total > cap:
        raise RuntimeError("fire log overflow")
    t = traj.events["t"]
    cx = traj.events["xy"][:, 0]
    cy = traj.events["xy"][:, 1]
    # a clearing fire burns a block lying inside the W x W cell [0, W)^2
    inside = (cx >= r) & (cx <= W - 1 - r) & (cy >= r) & (cy <= W - 1 - r)
    clear = np.flatnonzero(inside & (t <= T / 2))
    if clear.size == 0:
        return False
    c = clear[0]
    late = (t > T / 2) & (t <= 4 * T)
    ddx = np.abs(cx - cx[c]) % size
    ddy = np.abs(cy - cy[c]) % size
    # torus distance: a fire across the seam touches as well
    touches = (np.minimum(ddx, size - ddx) <= 2 * r) & (np.minimum(ddy, size - ddy) <= 2 * r)
    return not bool(np.any(late & touches))


def fire_gap_mc(delta0: float, F: int, W: int, T: float, replicates: int = 10_000,
                base_seed: int = 0, workers: int = 1) -> Estimate:
    """Frequency of: a fire clears a block inside a W x W cell during [0, T/2]
    and no fire touches that (first) cleared block during (T/2, 4T].

    On the lattice, with even ``F``, there are ``(W - F)^2`` admissible
    centres and ``(2F + 1)^2`` touching ones, so the exact value is
    ``lattice_fire_gap_probability``.
    """
    res = run_replicates(_fire_gap_replicate, base_seed, replicates, delta0, F, W, T,
                         workers=workers)
    return proportion(sum(res), replicates, "fire-gap", base_seed, delta0=delta0, F=F, W=W, T=T)


def lattice_fire_gap_probability(delta0: float, F: int, W: int, T: float) -> float:
    r = F // 2
    admissible = (W - 2 * r) ** 2
    touching = (4 * r + 1) ** 2
    return -math.expm1(-delta0 * admissible * T / 2) * math.exp(-delta0 * touching * 3.5 * T)


def _spread_replicate(seed: int, kernel: KernelTable, beta1: float, distance: int,
                      target_sites: int, T: float) -> bool:
    size = 2 * kernel.M + 3
    c = size // 2
    lat = new_lattice(size, size, "torus", {(c, c): 1})
    pinned = np.zeros(size * size, dtype=np.int8)
    pinned[c * size + c] = 1
    # only the source's arrows are counted; fast-dying offspring keep the log short
    params = ProcessParams(beta1=beta1, delta1=10.0 * beta1 + 10.0, kernel1=kernel)
    cap = int((beta1 + params.delta1) * T * 4 + 200)
    traj = run_until(lat, params, Stop(T / 2), make_rng(seed), Observers(log_capacity=cap),
                     pinned=pinned)
    if traj.events_total > cap:
        raise RuntimeError("event log overflow")
    ev = traj.events
    src = (ev["xy"][:, 0] == c) & (ev["xy"][:, 1] == c)
    arrows = src & np.isin(ev["kind"], (0, 5))
    dx = ev["xy"][arrows, 2] - c
    dy = ev["xy"][arrows, 3] - c
    # target: the first ``target_sites`` sites of the bottom edge of the shell at ``distance``
    hit = (dy == -distance) & (dx >= -distance) & (dx < -distance + target_sites)
    return bool(hit.any())


def spread_mc(c1: float, c2: float, rho: float, beta1: float, k: int, W: int, L: int, T: float,
              replicates: int = 10_000, base_seed: int = 0, workers: int = 1) -> Estimate:
    """Frequency with which a single maintained type-1 source sends an offspring
    into a target of ``L^2`` sites at L-infinity distance ``4kW`` within ``T/2``.

    The kernel is built with cutoff ``M = 4kW``; every target site then has
    mass ``c2 (4kW)^-rho`` and the exact value is ``spread_success_bound``.
    """
    D = 4 * k * W
    if L * L > 2 * D:
        raise ConfigError("target of L^2 sites must fit on one edge of the shell (L^2 <= 2*4kW)")
    kernel = build_power_kernel(c1, c2, rho, D)
    res = run_replicates(_spread_replicate, base_seed, replicates, kernel, beta1, D, L * L, T,
                         workers=workers)
    return proportion(sum(res), replicates, "spread", base_seed,
                      c2=c2, beta1=beta1, k=k, W=W, rho=rho, L=L, T=T)
