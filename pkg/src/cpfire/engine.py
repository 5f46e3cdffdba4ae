"""
Exact continuous-time simulation of the two-type contact process with fires.

The dynamics are run by aggregate-rate Gillespie dispatch: the total rate

    n1 (beta1 + delta1) + n2 (beta2 + delta2) + N_fire delta0

has five category terms, and within a category the acting site is uniform
over the matching registry. With ``flip=True`` the type-1 rules are replaced
by independent 0 <-> 1 flips on sites not holding a 2 (rates beta1 up,
delta1 down).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from . import _core
from .errors import AbsorbingState, ConfigError
from .fileio import atomic_write_csv
from .kernels import KernelTable, moore_kernel
from .lattice import Boundary, Lattice, fire_radius, write_snapshot

NO_LIMIT = 2**62


class EventKind(IntEnum):
    BIRTH1 = _core.BIRTH1
    BIRTH2 = _core.BIRTH2
    DEATH1 = _core.DEATH1
    DEATH2 = _core.DEATH2
    FIRE = _core.FIRE
    SUPPRESSED_BIRTH1 = _core.SUPP1
    SUPPRESSED_BIRTH2 = _core.SUPP2
    FLIP_UP = _core.FLIP_UP
    FLIP_DOWN = _core.FLIP_DOWN


_STOP_MODES = {
    "time": _core.STOP_NONE,
    "type1-extinct": _core.STOP_ONE_EXTINCT,
    "type2-extinct": _core.STOP_TWO_EXTINCT,
    "both-extinct": _core.STOP_BOTH_EXTINCT,
    "either-extinct": _core.STOP_EITHER_EXTINCT,
}


@dataclass(frozen=True)
class ProcessParams:
    """Rates (per unit time) and geometry of one process.

    ``F`` is the fire width in sites; the burned block has side
    ``2 * (F // 2) + 1``. ``flip`` selects the independent-flip type-1 rules.
    """

    beta1: float = 0.0
    beta2: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    delta0: float = 0.0
    F: int = 1
    kernel1: KernelTable = field(default_factory=moore_kernel)
    kernel2: KernelTable = field(default_factory=moore_kernel)
    flip: bool = False

    def __post_init__(self):
        for name in ("beta1", "beta2", "delta1", "delta2", "delta0"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a finite non-negative rate, got {v}")
        if int(self.F) < 1:
            raise ConfigError(f"fire width F must be >= 1, got {self.F}")
        if self.flip and self.delta0 > 0:
            raise ConfigError("the flip variant runs without fires (delta0 = 0)")

    @property
    def fire_radius(self) -> int:
        return fire_radius(self.F)

    @property
    def block_side(self) -> int:
        return 2 * self.fire_radius + 1

    def rates(self) -> NDArray[np.float64]:
        return np.array([self.beta1, self.beta2, self.delta1, self.delta2, self.delta0])

    def describe(self) -> dict:
        return {"beta1": self.beta1, "beta2": self.beta2, "delta1": self.delta1,
                "delta2": self.delta2, "delta0": self.delta0, "F": int(self.F),
                "block_side": self.block_side, "flip": self.flip,
                "kernel1": self.kernel1.describe(), "kernel2": self.kernel2.describe()}


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind
    source: tuple[int, int]
    target: tuple[int, int]


class Clock:
    """Simulation time plus the pre-drawn time of the next event, if any."""

    def __init__(self, t: float = 0.0):
        self.state = np.array([float(t), -1.0])

    @property
    def time(self) -> float:
        return float(self.state[0])

    def reset(self) -> None:
        """Forget the pending event time; required after editing the lattice by hand."""
        self.state[1] = -1.0


@dataclass(frozen=True)
class Stop:
    """Stop at ``t_max``, or earlier on the ``until`` condition, or once the
    occupied count reaches ``cap`` (0 disables the cap)."""

    t_max: float
    until: str = "time"
    cap: int = 0

    def __post_init__(self):
        if self.until not in _STOP_MODES:
            raise ConfigError(f"unknown stop condition {self.until!r}; use one of {sorted(_STOP_MODES)}")
        if not self.t_max >= 0:
            raise ConfigError(f"t_max must be >= 0, got {self.t_max}")


@dataclass
class Observers:
    sample_times: Sequence[float] | None = None
    snapshot_times: Sequence[float] | None = None
    track_hits: int | None = None
    log_capacity: int = 0
    snapshot_dir: Path | None = None


@dataclass
class Watch:
    """Detect, at every placement of ``type`` inside ``window``, a fully occupied
    square ``c + [-n, n]^2`` for a centre ``c`` flagged in ``mask``."""

    type: int
    n: int
    mask: NDArray[np.int8]
    window: tuple[float, float]
    found: float = math.inf


@dataclass
class Trajectory:
    seed: int | None
    times: NDArray[np.float64]
    n1: NDArray[np.int64]
    n2: NDArray[np.int64]
    extinction: dict[int, float | None]
    t_end: float
    status: str
    tally: dict[str, int]
    snapshots: list[tuple[float, NDArray[np.int8]]] = field(default_factory=list)
    hit_time: NDArray[np.float64] | None = None
    events: dict[str, NDArray] | None = None
    events_total: int = 0
    agreement: NDArray[np.float64] | None = None
    violations: int = 0

    def density(self, size: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.n1 / size, self.n2 / size

    def event_list(self) -> list[Event]:
        if self.events is None:
            return []
        ev = self.events
        return [Event(float(t), EventKind(int(k)), (int(xy[0]), int(xy[1])), (int(xy[2]), int(xy[3])))
                for t, k, xy in zip(ev["t"], ev["kind"], ev["xy"])]

    def write_series(self, path: str | Path) -> None:
        atomic_write_csv(path, ["t", "n1", "n2"],
                         ((float(t), int(a), int(b)) for t, a, b in zip(self.times, self.n1, self.n2)))

    def write_events(self, path: str | Path) -> None:
        ev = self.events or {"t": [], "kind": [], "xy": np.zeros((0, 4), dtype=int)}
        rows = ((float(t), EventKind(int(k)).name, *map(int, xy))
                for t, k, xy in zip(ev["t"], ev["kind"], ev["xy"]))
        atomic_write_csv(path, ["t", "kind", "src_x", "src_y", "tgt_x", "tgt_y"], rows)


def fire_centre_count(lattice: Lattice, params: ProcessParams) -> int:
    """Sites whose fire can touch the lattice: all of a torus, the box grown by the radius otherwise."""
    if lattice.torus:
        return lattice.size
    r = params.fire_radius
    return (lattice.width + 2 * r) * (lattice.height + 2 * r)


def total_rate(lattice: Lattice, params: ProcessParams) -> float:
    n0, n1, n2 = (int(c) for c in lattice.counts)
    p = params
    if p.flip:
        return n0 * p.beta1 + n1 * p.delta1 + n2 * (p.beta2 + p.delta2)
    return (n1 * (p.beta1 + p.delta1) + n2 * (p.beta2 + p.delta2)
            + fire_centre_count(lattice, p) * p.delta0)


_EMPTY_F = np.empty(0, dtype=np.float64)
_EMPTY_I8 = np.empty(0, dtype=np.int8)


def _empty_log():
    return (np.empty(0), np.empty(0), np.empty(0, dtype=np.int8),
            np.empty((0, 4), dtype=np.int64))


def _advance(lattice: Lattice, params: ProcessParams, rng, clock: Clock, t_stop: float,
             max_events: int = NO_LIMIT, stop_mode: int = _core.STOP_NONE, ext_time=None,
             hit_type: int = 0, hit_time=_EMPTY_F, log=None, log_n=None, tally=None,
             pinned=_EMPTY_I8, watch: Watch | None = None, cap: int = 0) -> int:
    log_t, log_rate, log_kind, log_xy = log if log is not None else _empty_log()
    if log_n is None:
        log_n = np.zeros(2, dtype=np.int64)
    if tally is None:
        tally = np.zeros(_core.TALLY_SIZE, dtype=np.int64)
    if ext_time is None:
        ext_time = np.full(3, np.nan)
    if watch is not None:
        w_found = np.array([watch.found])
        w_args = (int(watch.type), int(watch.n), watch.mask,
                  np.array(watch.window, dtype=np.float64), w_found)
    else:
        w_found = None
        w_args = (0, 0, _EMPTY_I8, np.zeros(2), np.array([math.inf]))
    status = _core.advance(
        lattice.grid, lattice.members, lattice.index, lattice.counts,
        lattice.width, lattice.height, lattice.torus,
        params.rates(), params.fire_radius, params.flip,
        params.kernel1.shell_cdf, params.kernel2.shell_cdf, rng, clock.state,
        float(t_stop), int(max_events), int(stop_mode), ext_time, int(hit_type), hit_time,
        log_t, log_rate, log_kind, log_xy, log_n, tally, pinned, *w_args, int(cap))
    if watch is not None:
        watch.found = float(w_found[0])
    return int(status)


def step(lattice: Lattice, params: ProcessParams, clock: Clock, rng: np.random.Generator) -> Event:
    """Execute exactly one event and return it.

    Raises AbsorbingState when the total rate is zero.
    """
    log = (np.empty(1), np.empty(1), np.empty(1, dtype=np.int8), np.empty((1, 4), dtype=np.int64))
    log_n = np.zeros(2, dtype=np.int64)
    status = _advance(lattice, params, rng, clock, math.inf, max_events=1, log=log, log_n=log_n)
    if status == _core.ABSORBED:
        raise AbsorbingState("total event rate is zero")
    # advance() returns MAX_EVENTS only when asked for a second event; one was logged
    t, _, kind, xy = log[0][0], log[1][0], log[2][0], log[3][0]
    return Event(float(t), EventKind(int(kind)), (int(xy[0]), int(xy[1])), (int(xy[2]), int(xy[3])))


def _schedule(obs: Observers, t0: float, t_max: float) -> tuple[NDArray, set, set]:
    samples = np.asarray(obs.sample_times if obs.sample_times is not None else [t0, t_max], dtype=float)
    snaps = np.asarray(obs.snapshot_times if obs.snapshot_times is not None else [], dtype=float)
    samples = samples[(samples >= t0) & (samples <= t_max)]
    snaps = snaps[(snaps >= t0) & (snaps <= t_max)]
    stops = np.unique(np.concatenate([samples, snaps, [t_max]]))
    return stops, set(samples.tolist()), set(snaps.tolist())


def _tally_dict(tally: NDArray[np.int64]) -> dict[str, int]:
    out = {k.name: int(tally[k.value]) for k in EventKind}
    out["BURNED_SITES"] = int(tally[_core.TALLY_BURNED])
    return out


def run_until(lattice: Lattice, params: ProcessParams, stop: Stop, rng: np.random.Generator,
              observers: Observers | None = None, *, seed: int | None = None,
              clock: Clock | None = None, pinned: NDArray[np.int8] | None = None,
              watch: Watch | None = None) -> Trajectory:
    """Evolve ``lattice`` in place until ``stop`` and return the observed record.

    Identical (seed, params, initial lattice, observers) give identical
    trajectories; the sample schedule does not influence the realisation.
    """
    obs = observers or Observers()
    clock = clock or Clock()
    t0 = clock.time
    mode = _STOP_MODES[stop.until]
    stops, sample_set, snap_set = _schedule(obs, t0, stop.t_max)

    ext_time = np.full(3, np.nan)
    for k in (1, 2):
        if lattice.counts[k] == 0:
            ext_time[k] = t0
    hit_time = _EMPTY_F
    hit_type = 0
    if obs.track_hits is not None:
        hit_type = int(obs.track_hits)
        hit_time = np.full(lattice.size, math.inf)
        hit_time[lattice.grid == hit_type] = t0
    cap = int(obs.log_capacity)
    log = (np.empty(cap), np.empty(cap), np.empty(cap, dtype=np.int8), np.empty((cap, 4), dtype=np.int64))
    log_n = np.zeros(2, dtype=np.int64)
    tally = np.zeros(_core.TALLY_SIZE, dtype=np.int64)
    pinned = _EMPTY_I8 if pinned is None else np.ascontiguousarray(pinned, dtype=np.int8)

    times, n1, n2, snapshots = [], [], [], []
    status = _core.REACHED_TIME
    stopped = mode != _core.STOP_NONE and _core._stop_reached(lattice.counts, mode)
    if stopped:
        status = _core.STOPPED
    if watch is not None and watch.window[0] <= t0 < watch.window[1]:
        _watch_scan(lattice, watch, t0)
    for target in stops:
        if stopped:
            break
        if watch is not None and clock.time < watch.window[0] <= target:
            # state at the window opening is checked directly; births after it are caught in-loop
            _advance(lattice, params, rng, clock, watch.window[0], stop_mode=mode, ext_time=ext_time,
                     hit_type=hit_type, hit_time=hit_time, log=log, log_n=log_n, tally=tally,
                     pinned=pinned, watch=None)
            _watch_scan(lattice, watch, watch.window[0])
        status = _advance(lattice, params, rng, clock, target, stop_mode=mode, ext_time=ext_time,
                          hit_type=hit_type, hit_time=hit_time, log=log, log_n=log_n, tally=tally,
                          pinned=pinned, watch=watch, cap=stop.cap)
        if status in (_core.STOPPED, _core.CAPPED):
            stopped = True
            break
        if target in sample_set:
            times.append(target)
            n1.append(lattice.n1)
            n2.append(lattice.n2)
        if target in snap_set:
            snapshots.append((target, lattice.array().copy()))
            if obs.snapshot_dir is not None:
                write_snapshot(Path(obs.snapshot_dir) / f"t{target:012.4f}.txt", lattice, target, seed)

    n_log = int(min(log_n[0], cap))
    events = None
    if cap:
        events = {"t": log[0][:n_log].copy(), "rate": log[1][:n_log].copy(),
                  "kind": log[2][:n_log].copy(), "xy": log[3][:n_log].copy()}
    status_name = {_core.REACHED_TIME: "time", _core.ABSORBED: "absorbed",
                   _core.STOPPED: "stopped", _core.CAPPED: "capped"}.get(status, "time")
    return Trajectory(
        seed=seed,
        times=np.array(times, dtype=float),
        n1=np.array(n1, dtype=np.int64),
        n2=np.array(n2, dtype=np.int64),
        extinction={k: (None if math.isnan(ext_time[k]) else float(ext_time[k])) for k in (1, 2)},
        t_end=clock.time,
        status=status_name,
        tally=_tally_dict(tally),
        snapshots=snapshots,
        hit_time=None if obs.track_hits is None else hit_time.reshape(lattice.height, lattice.width),
        events=events,
        events_total=int(log_n[1]),
    )


def _watch_scan(lattice: Lattice, watch: Watch, t: float) -> None:
    if watch.found != math.inf:
        return
    for c in np.flatnonzero(watch.mask):
        x, y = lattice.coords(int(c))
        if _core.square_full(lattice.grid, lattice.width, lattice.height, lattice.torus,
                             x, y, watch.n, watch.type):
            watch.found = float(t)
            return


def _check_single_type(lat: Lattice, params: ProcessParams) -> None:
    if lat.n2:
        raise ConfigError("coupled runs carry a single type (type 1)")
    if params.beta2 or params.delta2 or params.flip:
        raise ConfigError("coupled runs support the contact and Richardson variants only")


def coupled_run(lattice_a: Lattice, lattice_b: Lattice, params: ProcessParams, stop: Stop,
                rng: np.random.Generator, sample_times: Sequence[float] | None = None, *,
                truncate_a: tuple[int, int, int, int] | None = None, track_hits: bool = False,
                snapshot_times: Sequence[float] | None = None,
                seed: int | None = None) -> tuple[Trajectory, Trajectory]:
    """Run two single-type processes on one shared graphical representation.

    Both lattices see the same birth arrows, death marks and fire centres.
    ``truncate_a`` = (x0, y0, x1, y1) discards births of process A that land
    outside that window. The per-sample fraction of sites where A and B agree
    is stored in ``agreement`` of both trajectories; ``violations`` counts
    events after which A was not contained in B. Extinction times are
    resolved only to the first sample or snapshot time at which the type is
    gone.
    """
    if (lattice_a.width, lattice_a.height, lattice_a.boundary) != \
            (lattice_b.width, lattice_b.height, lattice_b.boundary):
        raise ConfigError("coupled lattices must share dimensions and boundary")
    for lat in (lattice_a, lattice_b):
        _check_single_type(lat, params)
    if stop.until != "time":
        raise ConfigError("coupled runs stop at a fixed time")
    clock = Clock()
    window = _EMPTY_I8.astype(np.int64) if truncate_a is None else np.array(truncate_a, dtype=np.int64)
    hit_a = _EMPTY_F
    if track_hits:
        hit_a = np.full(lattice_a.size, math.inf)
        hit_a[lattice_a.grid == 1] = 0.0
    violations = np.zeros(1, dtype=np.int64)
    tally = np.zeros(_core.TALLY_SIZE, dtype=np.int64)
    obs = Observers(sample_times=sample_times, snapshot_times=snapshot_times)
    stops, sample_set, snap_set = _schedule(obs, 0.0, stop.t_max)
    rec = {"a": ([], [], []), "b": ([], [], [])}
    agree, snaps_a, snaps_b = [], [], []
    full_check_failures = 0
    ext = {"a": None, "b": None}
    for target in stops:
        _core.coupled_advance(
            lattice_a.grid, lattice_a.members, lattice_a.index, lattice_a.counts,
            lattice_b.grid, lattice_b.members, lattice_b.index, lattice_b.counts,
            lattice_a.width, lattice_a.height, lattice_a.torus,
            params.beta1, params.delta1, params.delta0, params.fire_radius,
            params.kernel1.shell_cdf, rng, clock.state, float(target), window, hit_a,
            violations, tally)
        if np.any((lattice_a.grid == 1) & (lattice_b.grid != 1)):
            full_check_failures += 1
        for key, lat in (("a", lattice_a), ("b", lattice_b)):
            if ext[key] is None and lat.n1 == 0:
                ext[key] = float(target)
        if target in sample_set:
            for key, lat in (("a", lattice_a), ("b", lattice_b)):
                rec[key][0].append(target)
                rec[key][1].append(lat.n1)
                rec[key][2].append(lat.n2)
            agree.append(float(np.mean(lattice_a.grid == lattice_b.grid)))
        if target in snap_set:
            snaps_a.append((target, lattice_a.array().copy()))
            snaps_b.append((target, lattice_b.array().copy()))
    total_viol = int(violations[0]) + full_check_failures
    out = []
    for key, lat, snaps in (("a", lattice_a, snaps_a), ("b", lattice_b, snaps_b)):
        times, c1, c2 = rec[key]
        out.append(Trajectory(
            seed=seed, times=np.array(times), n1=np.array(c1, dtype=np.int64),
            n2=np.array(c2, dtype=np.int64),
            extinction={1: ext[key], 2: None},
            t_end=clock.time, status="time", tally=_tally_dict(tally), snapshots=snaps,
            events_total=int(sum(tally[k.value] for k in EventKind)),
            hit_time=hit_a.reshape(lat.height, lat.width) if (track_hits and key == "a") else None,
            agreement=np.array(agree), violations=total_viol))
    return out[0], out[1]
