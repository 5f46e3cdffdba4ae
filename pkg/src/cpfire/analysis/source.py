"""
Propagation of a maintained type-1 source across a grid of W x W cells.

Coordinates follow the cell grid: J_- = [-kW, 0]^2, J_+ = (0, kW]^2 and
J_{m,+-} is J_+- shifted by 2mkW along the first axis. A source in a cell
is a 2-free square of half-side ``r1 * L`` lying inside the cell and holding
at least one 1 at every checkpoint of the stage.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np
from numpy.typing import NDArray

from ..engine import Clock, Observers, ProcessParams, Stop, run_until
from ..errors import ConfigError
from ..kernels import build_power_kernel, long_range_norm
from ..lattice import new_lattice
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Estimate, proportion


@dataclass(frozen=True)
class SourceGridConfig:
    F: int
    alpha: float = 0.5
    k: int | None = None
    L: int = 2
    r1: float = 1.5
    T: float = 10.0
    burn_in: float = 0.0
    checkpoint_every: float | None = None

    def __post_init__(self):
        if self.F < 1 or self.alpha < 0 or self.L < 1 or self.r1 <= 1 or not self.T > 0:
            raise ConfigError("need F >= 1, alpha >= 0, L >= 1, r1 > 1, T > 0")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be >= 1")
        if 2 * self.half2 + 1 > self.W:
            raise ConfigError(f"a source square of side {2 * self.half2 + 1} does not fit a cell of side {self.W}")

    @property
    def blocks(self) -> int:
        return self.k if self.k is not None else max(1, round(self.F ** self.alpha))

    @property
    def W(self) -> int:
        return int(round(self.F + self.F ** (1 + self.alpha)))

    @property
    def M(self) -> int:
        return 4 * self.blocks * self.W

    @property
    def half2(self) -> int:
        return int(math.floor(self.r1 * self.L))

    @property
    def checkpoints(self) -> NDArray[np.float64]:
        dt = self.checkpoint_every or self.T / 8
        n = int(round(2 * self.T / dt))
        return 2 * self.T + dt * np.arange(n + 1)

    @property
    def extent(self) -> tuple[int, int, int, int]:
        """Box (x0, y0, x1, y1) in cell coordinates, one cell of margin around J_{-1,-}..J_{1,-} and J_{0,+}."""
        kW, W = self.blocks * self.W, self.W
        return -3 * kW - W, -kW - W, 2 * kW + W, kW + W


def rebuild_kernel(kernel, M: int):
    """Same short-range weight and exponent, cutoff moved to ``M``."""
    if kernel.M == 1:
        return kernel
    w_short = 8 * kernel.c1
    if not w_short < 1:
        raise ConfigError("the short-range weight leaves no mass for the long-range arm")
    return build_power_kernel(kernel.c1, (1 - w_short) / long_range_norm(kernel.rho, M), kernel.rho, M)


def _square_sums(a: NDArray, h: int) -> NDArray[np.int64]:
    """Sum of ``a`` over every (2h+1)-square; entry [i, j] is centred at grid (j+h, i+h)."""
    s = 2 * h + 1
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.int64)
    c[1:, 1:] = np.cumsum(np.cumsum(a, axis=0), axis=1)
    return c[s:, s:] - c[:-s, s:] - c[s:, :-s] + c[:-s, :-s]


def _cell_has_source(ok: NDArray[np.bool_], cfg: SourceGridConfig, ox: int, oy: int,
                     i: int, j: int) -> bool:
    W, h = cfg.W, cfg.half2
    # centres with the square inside [iW, (i+1)W] x [jW, (j+1)W], converted to ok[] indices
    x0, x1 = i * W + h - ox - h, (i + 1) * W - h - ox - h
    y0, y1 = j * W + h - oy - h, (j + 1) * W - h - oy - h
    if x1 < x0 or y1 < y0:
        return False
    return bool(ok[y0: y1 + 1, x0: x1 + 1].any())


def _source_replicate(seed: int, cfg: SourceGridConfig, params: ProcessParams) -> tuple[bool, bool]:
    rng = make_rng(seed)
    x0, y0, x1, y1 = cfg.extent
    w, hgt = x1 - x0 + 1, y1 - y0 + 1
    lat = new_lattice(w, hgt, "box", 2)
    clock = Clock()
    if cfg.burn_in > 0:
        run_until(lat, replace(params, beta1=0.0, delta0=0.0), Stop(cfg.burn_in), rng, clock=clock)
        clock = Clock()
    kW, h = cfg.blocks * cfg.W, cfg.half2
    # source square at the centre of J_{0,+}
    sx, sy = kW // 2 - x0, kW // 2 - y0
    arr = lat.array()
    arr[sy - h: sy + h + 1, sx - h: sx + h + 1] = 1
    lat.rebuild()
    pinned = np.zeros(lat.size, dtype=np.int8)
    pinned.reshape(hgt, w)[sy - h: sy + h + 1, sx - h: sx + h + 1] = 1
    run_until(lat, params, Stop(2 * cfg.T), rng, clock=clock, pinned=pinned, seed=seed)

    checks = cfg.checkpoints
    traj = run_until(lat, params, Stop(float(checks[-1])), rng, Observers(snapshot_times=checks),
                     clock=clock, seed=seed)
    ok = None
    for _, a in traj.snapshots:
        good = (_square_sums(a == 2, h) == 0) & (_square_sums(a == 1, h) > 0)
        ok = good if ok is None else ok & good
    if ok is None or len(traj.snapshots) < len(checks):
        return False, False
    k = cfg.blocks
    # J_{-1,-} = [-3kW, -2kW] x [-kW, 0]; J_{1,-} = [kW, 2kW] x [-kW, 0]
    left = any(_cell_has_source(ok, cfg, x0, y0, i, j) for i in range(-3 * k, -2 * k) for j in range(-k, 0))
    right = any(_cell_has_source(ok, cfg, x0, y0, i, j) for i in range(k, 2 * k) for j in range(-k, 0))
    return left, right


def source_propagation(config: SourceGridConfig, params: ProcessParams, replicates: int = 50,
                       base_seed: int = 0, workers: int = 1) -> Estimate:
    """Probability that a source held in J_{0,+} during [0, 2T] produces sources
    in both J_{-1,-} and J_{1,-} over the stage [2T, 4T].

    The type-1 kernel is rebuilt with cutoff M = 4kW. The box starts full of
    2's, optionally relaxed for ``burn_in`` with the 2's alone.
    """
    if params.flip:
        raise ConfigError("source propagation uses the two-type birth/death rules")
    kern = params.kernel1
    if kern.M > 1 and (1 + 2 * config.alpha) * kern.rho >= 3:
        warnings.warn("(1 + 2 alpha) rho >= 3: the spread bound is vacuous", stacklevel=2)
    p = replace(params, kernel1=rebuild_kernel(kern, config.M))
    res = run_replicates(_source_replicate, base_seed, replicates, config, p, workers=workers)
    both = sum(1 for a, b in res if a and b)
    return proportion(both, replicates, "source-propagation", base_seed,
                      config=asdict(config), k=config.blocks, W=config.W, M=config.M,
                      left=sum(a for a, _ in res), right=sum(b for _, b in res))
