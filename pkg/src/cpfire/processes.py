"""
Named process variants built on the engine, and the coexistence rate check.

Single-type variants (contact, Richardson) run in the type-1 slot with the
type-2 rates set to zero.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .engine import Observers, ProcessParams, Stop, Trajectory, run_until
from .errors import ConfigError
from .kernels import KernelTable, moore_kernel
from .lattice import Boundary, Lattice, new_lattice


class Variant(str, Enum):
    TWO_TYPE_FIRE = "two-type-fire"
    ZETA_FLIP = "zeta-flip"
    CONTACT = "contact"
    RICHARDSON = "richardson"


@dataclass(frozen=True)
class Initial:
    """Initial configuration descriptor.

    kinds: ``empty``; ``seed`` (one site of ``type`` at the centre);
    ``full`` (every site ``type``); ``block`` (centred square of half-width
    ``n`` of ``type``); ``random`` (independent sites, 1 w.p. ``p1``, 2 w.p.
    ``p2``).
    """

    kind: str = "seed"
    type: int = 1
    n: int = 0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        if self.kind not in {"empty", "seed", "full", "block", "random"}:
            raise ConfigError(f"unknown initial kind {self.kind!r}")
        if self.type not in (1, 2):
            raise ConfigError(f"initial type must be 1 or 2, got {self.type}")
        if self.kind == "random" and not (0 <= self.p1 and 0 <= self.p2 and self.p1 + self.p2 <= 1):
            raise ConfigError("random initial needs p1, p2 >= 0 with p1 + p2 <= 1")

    def build(self, width: int, height: int, boundary: Boundary,
              rng: np.random.Generator | None = None) -> Lattice:
        arr = np.zeros((height, width), dtype=np.int8)
        cx, cy = width // 2, height // 2
        if self.kind == "seed":
            arr[cy, cx] = self.type
        elif self.kind == "full":
            arr[:] = self.type
        elif self.kind == "block":
            if 2 * self.n + 1 > min(width, height):
                raise ConfigError(f"block half-width {self.n} does not fit a {width}x{height} lattice")
            arr[cy - self.n: cy + self.n + 1, cx - self.n: cx + self.n + 1] = self.type
        elif self.kind == "random":
            if rng is None:
                raise ConfigError("a random initial configuration needs an rng")
            u = rng.random((height, width))
            arr[u < self.p1] = 1
            arr[(u >= self.p1) & (u < self.p1 + self.p2)] = 2
        return new_lattice(width, height, boundary, arr)


@dataclass(frozen=True)
class ProcessSpec:
    variant: Variant
    params: ProcessParams
    size: int = 64
    window: int | None = None
    initial: Initial = field(default_factory=Initial)

    def __post_init__(self):
        p = self.params
        v = Variant(self.variant)
        if v in (Variant.CONTACT, Variant.RICHARDSON):
            if p.beta2 or p.delta2 or p.flip:
                raise ConfigError(f"{v.value} is single-type: type-2 rates must be zero")
            if self.initial.kind != "empty" and self.initial.type != 1 and self.initial.kind != "random":
                raise ConfigError(f"{v.value} occupies type-1 sites only")
            if self.initial.kind == "random" and self.initial.p2:
                raise ConfigError(f"{v.value} occupies type-1 sites only")
        if v is Variant.RICHARDSON and p.delta1 != 0:
            raise ConfigError("the Richardson model has death rate 0")
        if v is Variant.ZETA_FLIP and (not p.flip or p.delta0):
            raise ConfigError("zeta-flip needs the flip rules and delta0 = 0")
        if v is Variant.TWO_TYPE_FIRE and p.flip:
            raise ConfigError("two-type-fire uses the birth/death rules, not flips")
        if self.window is not None and self.window < 0:
            raise ConfigError("window half-width must be >= 0")
        if self.window is None and self.size < 1:
            raise ConfigError("lattice size must be >= 1")

    @property
    def width(self) -> int:
        return 2 * self.window + 1 if self.window is not None else self.size

    @property
    def boundary(self) -> Boundary:
        return Boundary.BOX if self.window is not None else Boundary.TORUS

    def describe(self) -> dict:
        return {"variant": Variant(self.variant).value, "params": self.params.describe(),
                "size": self.width, "boundary": self.boundary.value,
                "initial": asdict(self.initial)}


def contact(beta: float, delta: float = 1.0, kernel: KernelTable | None = None, *,
            delta0: float = 0.0, F: int = 1, size: int = 64, window: int | None = None,
            initial: Initial | None = None) -> ProcessSpec:
    params = ProcessParams(beta1=beta, delta1=delta, delta0=delta0, F=F,
                           kernel1=kernel or moore_kernel())
    return ProcessSpec(Variant.CONTACT, params, size, window, initial or Initial("seed", 1))


def richardson(beta: float, kernel: KernelTable | None = None, *, size: int = 64,
               window: int | None = None, initial: Initial | None = None) -> ProcessSpec:
    params = ProcessParams(beta1=beta, kernel1=kernel or moore_kernel())
    return ProcessSpec(Variant.RICHARDSON, params, size, window, initial or Initial("seed", 1))


def two_type_fire(params: ProcessParams, *, size: int = 64, window: int | None = None,
                  initial: Initial | None = None) -> ProcessSpec:
    return ProcessSpec(Variant.TWO_TYPE_FIRE, params, size, window,
                       initial or Initial("random", p1=0.25, p2=0.25))


def zeta_flip(beta1: float, delta1: float, beta2: float, delta2: float, *,
              kernel2: KernelTable | None = None, size: int = 64, window: int | None = None,
              initial: Initial | None = None) -> ProcessSpec:
    params = ProcessParams(beta1=beta1, beta2=beta2, delta1=delta1, delta2=delta2,
                           kernel2=kernel2 or moore_kernel(), flip=True)
    return ProcessSpec(Variant.ZETA_FLIP, params, size, window, initial or Initial("full", 2))


@dataclass
class Process:
    """A validated spec bound to the engine."""

    spec: ProcessSpec

    @property
    def params(self) -> ProcessParams:
        return self.spec.params

    def new_lattice(self, rng: np.random.Generator | None = None) -> Lattice:
        s = self.spec
        return s.initial.build(s.width, s.width, s.boundary, rng)

    def run(self, stop: Stop, rng: np.random.Generator, observers: Observers | None = None,
            lattice: Lattice | None = None, seed: int | None = None, **kw) -> tuple[Lattice, Trajectory]:
        lat = lattice if lattice is not None else self.new_lattice(rng)
        return lat, run_until(lat, self.params, stop, rng, observers, seed=seed, **kw)


def make_process(spec: ProcessSpec) -> Process:
    # ProcessSpec validates itself on construction; re-run it for specs built with replace()
    ProcessSpec.__post_init__(spec)
    return Process(spec)


@dataclass(frozen=True)
class ConditionReport:
    lambda_c: float
    first_lhs: float
    first_rhs: float
    first_pass: bool
    second_lhs: float
    second_rhs: float
    second_pass: bool
    gamma: float

    @property
    def passed(self) -> bool:
        return self.first_pass and self.second_pass

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2)


def check_condition_1(beta1: float, beta2: float, delta1: float, delta2: float,
                      lambda_c: float) -> ConditionReport:
    """Evaluate beta2 / (1 + beta1/delta1) > delta2 * lambda_c and beta1/delta1 > lambda_c."""
    if not delta1 > 0:
        raise ConfigError("delta1 must be positive")
    if not lambda_c > 0:
        raise ConfigError("lambda_c must be positive")
    ratio = beta1 / delta1
    first_lhs = beta2 / (1 + ratio)
    first_rhs = delta2 * lambda_c
    return ConditionReport(
        lambda_c=float(lambda_c),
        first_lhs=float(first_lhs), first_rhs=float(first_rhs), first_pass=bool(first_lhs > first_rhs),
        second_lhs=float(ratio), second_rhs=float(lambda_c), second_pass=bool(ratio > lambda_c),
        gamma=float(beta2 * delta1 / (beta1 + delta1)),
    )
