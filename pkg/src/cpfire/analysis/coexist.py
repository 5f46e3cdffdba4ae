"""
Long runs of the full two-type process with fires, paired with a fire-free
control on the same seeds.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from ..engine import Observers, ProcessParams, Stop, run_until
from ..errors import ConfigError, PreconditionError
from ..processes import Initial, check_condition_1
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Estimate, proportion


@dataclass
class CoexistenceResult:
    survive1: Estimate
    survive2: Estimate | None
    times: NDArray[np.float64]
    density1: NDArray[np.float64]
    density2: NDArray[np.float64]
    control_survive1: Estimate | None = None
    control_survive2: Estimate | None = None
    control_density1: NDArray[np.float64] | None = None
    control_density2: NDArray[np.float64] | None = None
    condition: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def control_declines(self) -> bool | None:
        """Mean control type-1 density decreasing at every sample step until it reaches 0."""
        if self.control_density1 is None:
            return None
        return is_declining(self.control_density1)


def is_declining(series: NDArray[np.float64]) -> bool:
    s = np.asarray(series, dtype=float)
    if len(s) < 2:
        return False
    d = np.diff(s)
    # once extinct the series is flat at 0, which still counts as decline
    return bool(np.all((d < 0) | ((s[1:] == 0) & (d <= 0))))


def _coexist_replicate(seed: int, params: ProcessParams, size: int, initial: Initial,
                       t_max: float, times: NDArray[np.float64], until: str) -> tuple[NDArray, NDArray]:
    rng = make_rng(seed)
    lat = initial.build(size, size, "torus", rng)
    traj = run_until(lat, params, Stop(t_max, until), rng, Observers(sample_times=times), seed=seed)
    n1 = np.zeros(len(times))
    n2 = np.zeros(len(times))
    n1[: len(traj.n1)] = traj.n1
    n2[: len(traj.n2)] = traj.n2
    if until == "type1-extinct":
        # type 2 is no longer followed once the run stops
        n2[len(traj.n2):] = np.nan
    return n1, n2


def _summarise(res, times, size, base_seed, tag, info):
    n1 = np.array([r[0] for r in res])
    n2 = np.array([r[1] for r in res])
    k1 = int(np.sum(n1[:, -1] > 0))
    n = len(res)
    s2 = None
    if not np.isnan(n2[:, -1]).any():
        s2 = proportion(int(np.sum(n2[:, -1] > 0)), n, f"{tag}-type2-survives", base_seed, **info)
    d2 = np.array([np.nan if np.isnan(c).all() else np.nanmean(c) for c in n2.T])
    return (proportion(k1, n, f"{tag}-type1-survives", base_seed, **info), s2,
            n1.mean(axis=0) / size**2, d2 / size**2)


def coexistence_run(params: ProcessParams, t_max: float, replicates: int = 100, base_seed: int = 0, *,
                    size: int = 512, initial: Initial | None = None, samples: int = 21,
                    lambda_c: float | None = None, control: bool = True,
                    workers: int = 1) -> CoexistenceResult:
    """Per-type survival fractions at ``t_max`` and mean density paths on a torus.

    With ``lambda_c`` given, the rates must pass ``check_condition_1`` first.
    The control repeats every replicate with the fires switched off and the
    same replicate seeds; it stops once type 1 is extinct, so its type-2
    density is NaN from then on and its type-2 survival is left as None.
    """
    if params.flip:
        raise ConfigError("coexistence runs use the two-type birth/death rules")
    if replicates < 1 or size < 1 or samples < 2:
        raise ConfigError("need replicates >= 1, size >= 1 and samples >= 2")
    cond = None
    if lambda_c is not None:
        rep = check_condition_1(params.beta1, params.beta2, params.delta1, params.delta2, lambda_c)
        cond = {**rep.__dict__, "passed": rep.passed}
        if not rep.passed:
            raise PreconditionError(f"rates fail the coexistence rate condition: {rep.to_json()}")
    init = initial or Initial("random", p1=0.25, p2=0.25)
    times = np.linspace(0.0, t_max, samples)
    info = {"size": size, "t_max": t_max, "params": params.describe()}
    res = run_replicates(_coexist_replicate, base_seed, replicates, params, size, init, t_max, times,
                         "both-extinct", workers=workers)
    e1, e2, d1, d2 = _summarise(res, times, size, base_seed, "fire", info)
    out = CoexistenceResult(e1, e2, times, d1, d2, condition=cond)
    if control:
        p0 = replace(params, delta0=0.0)
        res0 = run_replicates(_coexist_replicate, base_seed, replicates, p0, size, init, t_max, times,
                              "type1-extinct", workers=workers)
        c1, c2, cd1, cd2 = _summarise(res0, times, size, base_seed, "control", info)
        out.control_survive1, out.control_survive2 = c1, c2
        out.control_density1, out.control_density2 = cd1, cd2
    return out
