"""Survival probabilities P(tau > T)."""
from __future__ import annotations

from ..engine import Stop
from ..processes import ProcessSpec, make_process
from ..rng import make_rng
from .replicates import run_replicates
from .stats import Estimate, proportion


def _survives(seed: int, spec: ProcessSpec, T: float, focal: int, cap: int) -> bool:
    rng = make_rng(seed)
    proc = make_process(spec)
    lat, traj = proc.run(Stop(T, f"type{focal}-extinct", cap=cap), rng, seed=seed)
    return lat.count(focal) > 0


def survival_probability(spec: ProcessSpec, T: float, replicates: int, base_seed: int = 0, *,
                         focal: int = 1, cap: int = 0, workers: int = 1) -> Estimate:
    """Fraction of replicates in which type ``focal`` is still present at time ``T``.

    ``cap > 0`` ends a replicate as a survivor once the occupied count
    reaches ``cap``; only use it where extinction from that size before ``T``
    is negligible.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    alive = run_replicates(_survives, base_seed, replicates, spec, T, focal, cap, workers=workers)
    return proportion(sum(alive), replicates, "survival", base_seed,
                      T=T, focal=focal, cap=cap, spec=spec.describe())
