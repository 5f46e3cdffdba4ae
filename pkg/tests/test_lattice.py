import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cpfire.errors import ConfigError, PreconditionError
from cpfire.lattice import (Boundary, SiteState, clear_block, fire_radius, new_lattice, read_snapshot,
                            render, sample_occupied, write_snapshot)
from cpfire.rng import make_rng


def test_new_lattice_empty_full_singleton():
    a = new_lattice(3, 3, Boundary.TORUS)
    assert (a.n1, a.n2) == (0, 0)
    b = new_lattice(3, 3, "torus", 1)
    assert (b.n1, b.n2) == (9, 0)
    c = new_lattice(5, 5, "box", {(2, 2): SiteState.ONE})
    assert c.n1 == 1 and c.get(2, 2) == SiteState.ONE
    for lat in (a, b, c):
        lat.check_consistency()


@pytest.mark.parametrize("w,h", [(0, 3), (3, 0), (0, 0)])
def test_zero_dimension_rejected(w, h):
    with pytest.raises(ConfigError):
        new_lattice(w, h)


def test_array_initial_is_row_major():
    arr = np.zeros((2, 3), dtype=np.int8)
    arr[1, 2] = 2
    lat = new_lattice(3, 2, "box", arr)
    assert lat.get(2, 1) == SiteState.TWO
    assert lat.n2 == 1


def test_sample_occupied_singleton_and_empty():
    rng = make_rng(0)
    lat = new_lattice(4, 4, "torus", {(1, 3): 2})
    assert sample_occupied(lat, 2, rng) == (1, 3)
    with pytest.raises(PreconditionError):
        sample_occupied(lat, 1, rng)


def test_sample_occupied_uniform():
    rng = make_rng(1)
    sites = [(0, 0), (3, 1), (2, 2), (4, 4)]
    lat = new_lattice(5, 5, "torus", {s: 1 for s in sites})
    n = 100_000
    draws = [sample_occupied(lat, 1, rng) for _ in range(n)]
    counts = np.array([draws.count(s) for s in sites])
    sigma = np.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - n / 4) < 5 * sigma)
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.mark.parametrize("F,expected", [(2, 9), (4, 25), (1, 1), (3, 9), (5, 25)])
def test_clear_block_full_torus(F, expected):
    lat = new_lattice(9, 9, "torus", 1)
    assert clear_block(lat, (4, 4), F) == expected
    assert lat.n1 == 81 - expected
    lat.check_consistency()


def test_clear_block_wraps_on_torus():
    lat = new_lattice(9, 9, "torus", 2)
    assert clear_block(lat, (0, 0), 4) == 25
    a = lat.array()
    assert a[8, 8] == 0 and a[2, 2] == 0 and a[3, 3] == 2


def test_clear_block_clipped_at_box_corner():
    lat = new_lattice(9, 9, "box", 1)
    assert clear_block(lat, (0, 0), 4) == 9
    assert lat.n1 == 72


def test_clear_block_centre_outside_box():
    lat = new_lattice(5, 5, "box", 1)
    # centre two sites left of the box reaches only column 0
    assert clear_block(lat, (-2, 2), 4) == 5


def test_clear_block_idempotent():
    rng = make_rng(3)
    arr = rng.integers(0, 3, size=(12, 12)).astype(np.int8)
    once = new_lattice(12, 12, "torus", arr)
    twice = once.copy()
    clear_block(once, (5, 7), 6)
    clear_block(twice, (5, 7), 6)
    clear_block(twice, (5, 7), 6)
    assert np.array_equal(once.grid, twice.grid)
    twice.check_consistency()


def test_fire_radius_parity():
    assert [fire_radius(F) for F in (1, 2, 3, 4, 16)] == [0, 1, 1, 2, 8]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 4), st.integers(0, 2)), max_size=80),
       st.sampled_from(["torus", "box"]))
def test_registry_replay(ops, boundary):
    lat = new_lattice(6, 5, boundary)
    ref = np.zeros((5, 6), dtype=np.int8)
    for x, y, s in ops:
        lat.set(x, y, s)
        ref[y, x] = s
        if (x + y) % 7 == 0:
            clear_block(lat, (x, y), 2)
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    xx, yy = x + dx, y + dy
                    if boundary == "torus":
                        ref[yy % 5, xx % 6] = 0
                    elif 0 <= xx < 6 and 0 <= yy < 5:
                        ref[yy, xx] = 0
    lat.check_consistency()
    assert np.array_equal(lat.array(), ref)
    assert lat.n1 == int((ref == 1).sum()) and lat.n2 == int((ref == 2).sum())


def test_snapshot_round_trip(tmp_path):
    lat = new_lattice(4, 3, "box", {(0, 0): 1, (3, 2): 2})
    path = tmp_path / "snap.txt"
    write_snapshot(path, lat, 1.5, seed=7)
    text = path.read_text().splitlines()
    assert text == render(lat).splitlines()
    assert set("".join(text)) <= set(".12")
    back, header = read_snapshot(path)
    assert np.array_equal(back.grid, lat.grid)
    assert header["time"] == 1.5 and header["seed"] == 7 and header["boundary"] == "box"
