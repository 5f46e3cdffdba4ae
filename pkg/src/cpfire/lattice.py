"""
Dense 2D lattice of site states with O(1) per-type registries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.typing import NDArray

from . import _core
from .errors import ConfigError, PreconditionError
from .fileio import atomic_write_text


class SiteState(IntEnum):
    VACANT = 0
    ONE = 1
    TWO = 2


class Boundary(str, Enum):
    TORUS = "torus"
    BOX = "box"


SNAPSHOT_CHARS = ".12"


def fire_radius(F: int) -> int:
    """Integer block radius for a fire of width ``F`` (block side ``2*radius + 1``)."""
    if F < 1:
        raise ConfigError(f"fire width F must be >= 1, got {F}")
    return int(F) // 2


@dataclass(eq=False)
class Lattice:
    """Site grid plus the dense registries used by the engine.

    ``grid`` is flat (``s = y * width + x``); ``members[k, :counts[k]]`` lists
    the sites in state ``k`` and ``index[s]`` is the position of ``s`` in its
    list. Use :func:`new_lattice` to construct one.
    """

    width: int
    height: int
    boundary: Boundary
    grid: NDArray[np.int8]
    members: NDArray[np.int32] = field(repr=False)
    index: NDArray[np.int32] = field(repr=False)
    counts: NDArray[np.int64]

    @property
    def torus(self) -> bool:
        return self.boundary is Boundary.TORUS

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def n1(self) -> int:
        return int(self.counts[1])

    @property
    def n2(self) -> int:
        return int(self.counts[2])

    @property
    def n0(self) -> int:
        return int(self.counts[0])

    def count(self, state: SiteState | int) -> int:
        return int(self.counts[int(state)])

    def array(self) -> NDArray[np.int8]:
        """2D view (rows are y) onto the grid; writes through, so call :meth:`rebuild` after editing."""
        return self.grid.reshape(self.height, self.width)

    def site(self, x: int, y: int) -> int:
        s = _core.resolve(int(x), int(y), self.width, self.height, self.torus)
        if s < 0:
            raise PreconditionError(f"site ({x}, {y}) lies outside the box")
        return s

    def coords(self, s: int) -> tuple[int, int]:
        return s % self.width, s // self.width

    def get(self, x: int, y: int) -> SiteState:
        return SiteState(int(self.grid[self.site(x, y)]))

    def set(self, x: int, y: int, state: SiteState | int) -> None:
        _core.set_state(self.grid, self.members, self.index, self.counts,
                        self.site(x, y), np.int8(int(state)))

    def rebuild(self) -> None:
        _core.rebuild_registries(self.grid, self.members, self.index, self.counts)

    def copy(self) -> "Lattice":
        return Lattice(self.width, self.height, self.boundary, self.grid.copy(),
                       self.members.copy(), self.index.copy(), self.counts.copy())

    def occupied(self, state: SiteState | int) -> NDArray[np.int32]:
        k = int(state)
        return self.members[k, : self.counts[k]]

    def check_consistency(self) -> None:
        """Raise AssertionError if registries and grid disagree."""
        for k in range(3):
            listed = self.members[k, : self.counts[k]]
            assert int(np.count_nonzero(self.grid == k)) == int(self.counts[k])
            assert np.all(self.grid[listed] == k)
            assert np.array_equal(self.index[listed], np.arange(len(listed)))

    def sample_occupied(self, state: SiteState | int, rng: np.random.Generator) -> tuple[int, int]:
        return sample_occupied(self, state, rng)

    def clear_block(self, center: tuple[int, int], F: int) -> int:
        return clear_block(self, center, F)


def new_lattice(width: int, height: int, boundary: Boundary | str = Boundary.TORUS,
                initial: int | NDArray | Mapping[tuple[int, int], int] | None = None) -> Lattice:
    """Build a lattice.

    ``initial`` is None (all vacant), a single state for every site, a
    (height, width) array of states, or a mapping ``{(x, y): state}``.
    """
    if int(width) < 1 or int(height) < 1:
        raise ConfigError(f"lattice dimensions must be positive, got {width}x{height}")
    width, height = int(width), int(height)
    boundary = Boundary(boundary)
    grid = np.zeros(width * height, dtype=np.int8)
    if initial is None:
        pass
    elif isinstance(initial, Mapping):
        for (x, y), st in initial.items():
            s = _core.resolve(int(x), int(y), width, height, boundary is Boundary.TORUS)
            if s < 0:
                raise ConfigError(f"initial site ({x}, {y}) outside the {width}x{height} box")
            grid[s] = int(st)
    elif np.isscalar(initial):
        grid[:] = int(initial)
    else:
        arr = np.asarray(initial)
        if arr.shape != (height, width):
            raise ConfigError(f"initial array has shape {arr.shape}, expected {(height, width)}")
        grid[:] = arr.reshape(-1)
    if grid.size and (grid.min() < 0 or grid.max() > 2):
        raise ConfigError("site states must be 0, 1 or 2")
    members = np.empty((3, width * height), dtype=np.int32)
    index = np.empty(width * height, dtype=np.int32)
    counts = np.zeros(3, dtype=np.int64)
    _core.rebuild_registries(grid, members, index, counts)
    return Lattice(width, height, boundary, grid, members, index, counts)


def sample_occupied(lattice: Lattice, state: SiteState | int, rng: np.random.Generator) -> tuple[int, int]:
    """Uniform site among those currently in ``state``."""
    k = int(state)
    n = int(lattice.counts[k])
    if n == 0:
        raise PreconditionError(f"no sites in state {SiteState(k).name}")
    s = int(lattice.members[k, rng.integers(0, n)])
    return lattice.coords(s)


def clear_block(lattice: Lattice, center: tuple[int, int], F: int) -> int:
    """Vacate every site within L-infinity distance ``F // 2`` of ``center``.

    Wraps on a torus and clips in a box; ``center`` may lie outside a box.
    Returns the number of occupied sites removed.
    """
    r = fire_radius(F)
    return int(_core.clear_block(lattice.grid, lattice.members, lattice.index, lattice.counts,
                                 lattice.width, lattice.height, lattice.torus,
                                 int(center[0]), int(center[1]), r, np.empty(0, dtype=np.int8)))


def render(lattice: Lattice) -> str:
    rows = lattice.array()
    lut = np.array(list(SNAPSHOT_CHARS))
    return "\n".join("".join(lut[row]) for row in rows) + "\n"


def write_snapshot(path: str | Path, lattice: Lattice, time: float, seed: int | None = None) -> None:
    """Write the text grid to ``path`` and its JSON header next to it (``.json``)."""
    path = Path(path)
    header = {"width": lattice.width, "height": lattice.height,
              "boundary": lattice.boundary.value, "time": float(time), "seed": seed}
    atomic_write_text(path, render(lattice))
    atomic_write_text(path.with_suffix(".json"), json.dumps(header, indent=2) + "\n")


def read_snapshot(path: str | Path) -> tuple[Lattice, dict]:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    rows = path.read_text().splitlines()
    arr = np.array([[SNAPSHOT_CHARS.index(c) for c in row] for row in rows], dtype=np.int8)
    lat = new_lattice(header["width"], header["height"], header["boundary"], arr)
    return lat, header
