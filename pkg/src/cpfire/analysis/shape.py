"""
Growth-shape measurements for single-seed contact and Richardson processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import stats
from scipy.spatial import ConvexHull, QhullError

from ..engine import Observers, ProcessParams, Stop, coupled_run, run_until
from ..errors import ConfigError
from ..lattice import new_lattice
from ..processes import ProcessSpec, Variant
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Estimate, proportion, z_score

# compass directions E, NE, N, NW, W, SW, S, SE
DIRECTIONS = np.array([(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)])
DIRECTION_NAMES = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")


@dataclass
class ShapeData:
    times: NDArray[np.float64]
    hit_time: NDArray[np.float64]
    origin: tuple[int, int]
    valid: NDArray[np.bool_]
    area: NDArray[np.int64]
    extents: NDArray[np.float64]
    speeds: NDArray[np.float64]
    inner_speed: float
    outer_speed: float
    radius_fit: dict
    convexity: NDArray[np.float64]
    coupled: list[NDArray[np.bool_]] | None = None
    coupled_inner_fraction: NDArray[np.float64] | None = None
    extra: dict = field(default_factory=dict)

    def hit_set(self, t: float) -> NDArray[np.bool_]:
        """H_t as a boolean grid."""
        return self.hit_time <= t

    @property
    def effective_radius(self) -> NDArray[np.float64]:
        return np.sqrt(self.area) / 2


def _directional_extent(mask: NDArray[np.bool_], origin: tuple[int, int]) -> NDArray[np.float64]:
    ys, xs = np.nonzero(mask)
    dx = xs - origin[0]
    dy = ys - origin[1]
    # furthest progress along each ray, diagonals rescaled to lattice steps
    proj = np.outer(dx, DIRECTIONS[:, 0]) + np.outer(dy, DIRECTIONS[:, 1])
    norm = np.array([1, 2, 1, 2, 1, 2, 1, 2])
    return proj.max(axis=0) / norm


def _convexity(mask: NDArray[np.bool_]) -> float:
    ys, xs = np.nonzero(mask)
    if len(xs) < 4:
        return 1.0
    # each hit site is a unit square; hull of corners
    pts = np.concatenate([np.c_[xs + ox, ys + oy] for ox in (-0.5, 0.5) for oy in (-0.5, 0.5)])
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return 1.0
    return float(len(xs) / hull.volume)


def _fit_half(t: NDArray, y: NDArray) -> dict:
    half = len(t) // 2
    tt, yy = t[half:], y[half:]
    if len(tt) < 3 or np.ptp(tt) == 0:
        return {"slope": math.nan, "intercept": math.nan, "r2": math.nan, "points": int(len(tt))}
    fit = stats.linregress(tt, yy)
    return {"slope": float(fit.slope), "intercept": float(fit.intercept),
            "r2": float(fit.rvalue**2), "points": int(len(tt))}


def shape_measure(spec: ProcessSpec, horizon: float, sample_times=None, seed: int = 0, *,
                  coupled: bool = False, eps: float = 0.5, burn_in: float = 0.0) -> ShapeData:
    """Measure the hit set H_t (and, with ``coupled=True``, the coupled region K_t).

    The process starts from a single occupied site at the centre of a torus
    of side ``spec.size``. A sample is flagged invalid once H_t reaches the
    outermost ring of the torus. Directional speeds are least-squares slopes
    of the extent along each compass ray over the second half of the valid
    samples; the inner/outer box speeds are their min/max.
    """
    if spec.variant not in (Variant.CONTACT, Variant.RICHARDSON):
        raise ConfigError("shape measurement needs a contact or Richardson spec")
    if spec.window is not None:
        raise ConfigError("shape measurement runs on a torus")
    size = spec.size
    times = np.asarray(sample_times if sample_times is not None else np.linspace(0, horizon, 51), float)
    times = times[(times >= 0) & (times <= horizon)]
    origin = (size // 2, size // 2)
    rng = make_rng(seed)
    params = spec.params
    a = new_lattice(size, size, "torus", {origin: 1})
    masks_k = None
    if coupled:
        b = new_lattice(size, size, "torus", 1)
        if burn_in > 0:
            run_until(b, params, Stop(burn_in), make_rng(seed ^ 0x5EED))
        ta, tb = coupled_run(a, b, params, Stop(horizon), rng, times, track_hits=True,
                             snapshot_times=times, seed=seed)
        hit_time = ta.hit_time
        masks_k = [sa[1] == sb[1] for sa, sb in zip(ta.snapshots, tb.snapshots)]
    else:
        traj = run_until(a, params, Stop(horizon), rng, Observers(sample_times=times, track_hits=1),
                         seed=seed)
        hit_time = traj.hit_time

    border = np.zeros((size, size), dtype=bool)
    border[[0, -1], :] = True
    border[:, [0, -1]] = True
    area, extents, valid, convexity = [], [], [], []
    for t in times:
        h = hit_time <= t
        area.append(int(h.sum()))
        extents.append(_directional_extent(h, origin))
        valid.append(not bool((h & border).any()))
        convexity.append(_convexity(h))
    area = np.array(area)
    extents = np.array(extents)
    valid = np.array(valid)
    tv = times[valid]
    speeds = np.array([_fit_half(tv, extents[valid, d])["slope"] for d in range(8)])
    radius_fit = _fit_half(tv, np.sqrt(area[valid]) / 2)
    inner, outer = float(np.nanmin(speeds)), float(np.nanmax(speeds))

    inner_frac = None
    if masks_k is not None:
        inner_frac = []
        ys, xs = np.indices((size, size))
        cheb = np.maximum(np.abs(xs - origin[0]), np.abs(ys - origin[1]))
        for t, k in zip(times, masks_k):
            box = cheb <= (1 - eps) * inner * t
            c = (hit_time <= t) & k
            inner_frac.append(float(c[box].mean()) if box.any() else 1.0)
        inner_frac = np.array(inner_frac)

    return ShapeData(times=times, hit_time=hit_time, origin=origin, valid=valid, area=area,
                     extents=extents, speeds=speeds, inner_speed=inner, outer_speed=outer,
                     radius_fit=radius_fit, convexity=np.array(convexity), coupled=masks_k,
                     coupled_inner_fraction=inner_frac,
                     extra={"directions": DIRECTION_NAMES, "eps": eps})


def _hits(seed: int, params: ProcessParams, size: int, start, target, t: float) -> bool:
    lat = new_lattice(size, size, "torus", {p: 1 for p in start})
    traj = run_until(lat, params, Stop(t), make_rng(seed), Observers(track_hits=1))
    return bool(any(traj.hit_time[y, x] <= t for x, y in target))


def duality_check(beta: float, A, B, t: float, replicates: int = 10_000, base_seed: int = 0,
                  size: int = 41, kernel=None, workers: int = 1) -> tuple[Estimate, Estimate, float]:
    """Two-sample test of P(R_t^A meets B) = P(R_t^B meets A) for the Richardson model.

    ``A`` and ``B`` are site lists relative to the torus centre. Returns both
    estimates (independent seed streams) and the z-score of their difference.
    """
    from ..kernels import moore_kernel

    params = ProcessParams(beta1=beta, kernel1=kernel or moore_kernel())
    c = size // 2
    a = [(c + x, c + y) for x, y in A]
    b = [(c + x, c + y) for x, y in B]
    if set(a) & set(b):
        raise ConfigError("A and B must be disjoint")
    ab = run_replicates(_hits, base_seed, replicates, params, size, a, b, t, workers=workers)
    ba = run_replicates(_hits, base_seed + 1, replicates, params, size, b, a, t, workers=workers)
    e1 = proportion(sum(ab), replicates, "richardson A->B", base_seed)
    e2 = proportion(sum(ba), replicates, "richardson B->A", base_seed + 1)
    pooled = (sum(ab) + sum(ba)) / (2 * replicates)
    sigma = math.sqrt(max(pooled * (1 - pooled), 1e-300) * 2 / replicates)
    return e1, e2, z_score(e1.value, e2.value, sigma)
