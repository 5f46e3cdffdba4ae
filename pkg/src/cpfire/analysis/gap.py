"""
Colonisation of a cleared gap: a type-1 seed inside a vacant square hole
surrounded by 2's, with fires off.

Three concentric squares about the centre: B1 (half-side L), B2 (half-side
r1*L) and B3 (half-side r2*L, the hole). The lattice is a torus wide enough
that the 2's ring outside B3 is at least ``margin`` sites thick.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from ..engine import Observers, ProcessParams, Stop, run_until
from ..errors import ConfigError
from ..lattice import new_lattice
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Estimate, proportion


@dataclass(frozen=True)
class GapExperimentConfig:
    L: int
    r1: float
    r2: float
    T: float
    margin: int | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if not 1 < self.r1 < self.r2:
            raise ConfigError(f"need 1 < r1 < r2, got r1={self.r1}, r2={self.r2}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.half2 >= self.half3:
            raise ConfigError("B2 must sit strictly inside B3 after rounding")

    @property
    def half1(self) -> int:
        return self.L

    @property
    def half2(self) -> int:
        return int(math.floor(self.r1 * self.L))

    @property
    def half3(self) -> int:
        return int(math.floor(self.r2 * self.L))

    @property
    def F(self) -> int:
        """Fire side whose cleared block is B3."""
        return 2 * self.half3 + 1

    @property
    def size(self) -> int:
        m = self.margin if self.margin is not None else max(8, self.half3 // 2)
        return 2 * (self.half3 + m) + 1


def gap_horizon(L: float, inner_speed: float) -> float:
    """T = 8L / (7 R), with R the inner box speed of the 1's."""
    if not inner_speed > 0:
        raise ConfigError("inner speed must be positive")
    return 8.0 * L / (7.0 * inner_speed)


def _gap_replicate(seed: int, cfg: GapExperimentConfig, params: ProcessParams) -> tuple[bool, bool, bool]:
    rng = make_rng(seed)
    size = cfg.size
    c = size // 2
    arr = np.full((size, size), 2, dtype=np.int8)
    h3 = cfg.half3
    arr[c - h3: c + h3 + 1, c - h3: c + h3 + 1] = 0
    sx, sy = c + rng.integers(-cfg.L, cfg.L + 1, size=2)
    arr[sy, sx] = 1
    lat = new_lattice(size, size, "torus", arr)
    h2 = cfg.half2
    inner = (slice(c - h2, c + h2 + 1), slice(c - h2, c + h2 + 1))
    t_end = 3.5 * cfg.T
    obs = Observers(snapshot_times=[cfg.T, t_end], track_hits=2)
    traj = run_until(lat, params, Stop(t_end), rng, obs, seed=seed)
    states = {t: a for t, a in traj.snapshots}
    at_T = bool((states[cfg.T][inner] == 1).any()) if cfg.T in states else False
    at_end = bool((states[t_end][inner] == 1).any()) if t_end in states else False
    no_twos = not bool(np.isfinite(traj.hit_time[inner]).any())
    return at_T, at_end, no_twos


def gap_experiment(config: GapExperimentConfig, params: ProcessParams, replicates: int = 200,
                   base_seed: int = 0, workers: int = 1) -> tuple[Estimate, Estimate]:
    """Estimate (i) P(1's present in B2 at 7T/2 | present in B2 at T) by
    replicate filtering and (ii) P(no 2 enters B2 during [0, 7T/2]).

    Fires are switched off whatever ``params.delta0`` says.
    """
    if params.flip:
        raise ConfigError("the gap experiment uses the two-type birth/death rules")
    p = replace(params, delta0=0.0)
    res = run_replicates(_gap_replicate, base_seed, replicates, config, p, workers=workers)
    passed = [r for r in res if r[0]]
    kept = sum(r[1] for r in passed)
    clean = sum(r[2] for r in res)
    info = {"config": asdict(config), "size": config.size}
    est_i = proportion(kept, len(passed), "gap-persistence", base_seed,
                       conditioned_on=len(passed), **info)
    est_ii = proportion(clean, replicates, "gap-no-invasion", base_seed, **info)
    return est_i, est_ii
