"""
Radial dispersal kernels on Z^2 in the L-infinity metric.

A kernel is stored by shell: shell ``r`` (1 <= r <= M) holds the 8r sites at
L-infinity distance r, all with equal mass. Sampling picks the shell from its
cumulative distribution and then a uniform site on the shell.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from . import _core
from .errors import ConfigError, NormalizationError
from .fileio import atomic_write_csv

MASS_TOL = 1e-12


def shell_size(r: int) -> int:
    """Number of sites at L-infinity distance ``r`` from a point (8r for r >= 1)."""
    return 8 * r if r >= 1 else 1


@dataclass(frozen=True, eq=False)
class KernelTable:
    c1: float
    c2: float
    rho: float
    M: int
    shell_mass: NDArray[np.float64] = field(repr=False)
    shell_cdf: NDArray[np.float64] = field(repr=False)

    @property
    def total_mass(self) -> float:
        return float(self.shell_mass.sum())

    def mass_at(self, dx: int, dy: int) -> float:
        """Probability of the single offset (dx, dy)."""
        r = max(abs(int(dx)), abs(int(dy)))
        if r < 1 or r > self.M:
            return 0.0
        return float(self.shell_mass[r - 1] / shell_size(r))

    def radii(self) -> NDArray[np.int64]:
        return np.arange(1, self.M + 1)

    def describe(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "rho": self.rho, "M": self.M}

    def write_csv(self, path: str | Path) -> None:
        """Dump per-shell masses (``r,sites,shell_mass,site_mass,cdf``)."""
        rows = []
        for r, m, c in zip(self.radii(), self.shell_mass, self.shell_cdf):
            rows.append((int(r), shell_size(int(r)), float(m), float(m) / shell_size(int(r)), float(c)))
        atomic_write_csv(path, ["r", "sites", "shell_mass", "site_mass", "cdf"], rows)


def _table(c1: float, c2: float, rho: float, M: int, shell_mass: NDArray[np.float64]) -> KernelTable:
    mass = float(shell_mass.sum())
    if abs(mass - 1.0) > MASS_TOL:
        raise NormalizationError(mass)
    cdf = np.cumsum(shell_mass)
    cdf[-1] = 1.0
    shell_mass.flags.writeable = False
    cdf.flags.writeable = False
    return KernelTable(float(c1), float(c2), float(rho), int(M), shell_mass, cdf)


def moore_kernel() -> KernelTable:
    """Uniform kernel on the 8 nearest neighbours (mass 1/8 each)."""
    return _table(1 / 8, 0.0, 0.0, 1, np.array([1.0]))


def build_power_kernel(c1: float, c2: float, rho: float, M: int) -> KernelTable:
    """Truncated power law: ``c1`` on shell 1, ``c2 * r**-rho`` per site on shells 2..M.

    Raises NormalizationError when the total mass is not 1 to within 1e-12.
    """
    M = int(M)
    if M < 1:
        raise ConfigError(f"cutoff M must be >= 1, got {M}")
    if not c1 > 0:
        raise ConfigError(f"c1 must be positive, got {c1}")
    if M > 1 and not c2 > 0:
        raise ConfigError(f"c2 must be positive when M > 1, got {c2}")
    if not rho < 3:
        raise ConfigError(f"rho must be < 3, got {rho}")
    r = np.arange(1, M + 1, dtype=np.float64)
    shell_mass = np.empty(M)
    shell_mass[0] = 8 * c1
    if M > 1:
        shell_mass[1:] = 8 * r[1:] * c2 * r[1:] ** (-float(rho))
    return _table(c1, c2 if M > 1 else 0.0, rho, M, shell_mass)


def long_range_norm(rho: float, M: int) -> float:
    """Sum over shells 2..M of 8 r * r**-rho."""
    r = np.arange(2, int(M) + 1, dtype=np.float64)
    return float(np.sum(8 * r ** (1 - float(rho))))


def normalize_weights(w_short: float, w_long: float, rho: float, M: int) -> tuple[float, float]:
    """Coefficients (c1, c2) putting mass ``w_short`` on shell 1 and ``w_long`` beyond."""
    if not (w_short > 0 and w_long > 0):
        raise ConfigError(f"w_short and w_long must both be positive, got {w_short}, {w_long}")
    if abs(w_short + w_long - 1.0) > MASS_TOL:
        raise ConfigError(f"w_short + w_long must be 1, got {w_short + w_long!r}")
    if int(M) < 2:
        raise ConfigError(f"a long-range arm needs M >= 2, got {M}")
    return w_short / 8, w_long / long_range_norm(rho, M)


def kernel_from_weights(w_short: float, w_long: float, rho: float, M: int) -> KernelTable:
    c1, c2 = normalize_weights(w_short, w_long, rho, M)
    return build_power_kernel(c1, c2, rho, M)


def kernel_from_config(section: dict) -> KernelTable:
    """Build from ``c1/c2/rho/M`` or ``w_short/w_long/rho/M``; empty section gives Moore."""
    keys = set(section)
    if not keys:
        return moore_kernel()
    rho = float(section.get("rho", 2.0))
    M = int(section.get("M", 1))
    if {"w_short", "w_long"} & keys:
        if {"c1", "c2"} & keys:
            raise ConfigError("give either c1/c2 or w_short/w_long, not both")
        return kernel_from_weights(float(section["w_short"]), float(section["w_long"]), rho, M)
    if "c1" not in keys:
        raise ConfigError("kernel needs c1 (and c2 when M > 1) or w_short/w_long")
    return build_power_kernel(float(section["c1"]), float(section.get("c2", 0.0)), rho, M)


def sample_dispersal(kernel: KernelTable, x: tuple[int, int], rng: np.random.Generator) -> tuple[int, int]:
    """Birth target for a parent at ``x`` (unwrapped lattice coordinates)."""
    dx, dy = _core.sample_offset(kernel.shell_cdf, rng)
    return x[0] + dx, x[1] + dy


def sample_offsets(kernel: KernelTable, n: int, rng: np.random.Generator) -> NDArray[np.int64]:
    """``n`` independent offsets as an (n, 2) array."""
    return _core.sample_offsets(kernel.shell_cdf, rng, int(n))
