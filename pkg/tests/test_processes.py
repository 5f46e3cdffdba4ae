import math

import numpy as np
import pytest

from cpfire.engine import Observers, ProcessParams, Stop
from cpfire.errors import ConfigError
from cpfire.kernels import kernel_from_weights
from cpfire.processes import (Initial, ProcessSpec, Variant, check_condition_1, contact, make_process,
                              richardson, two_type_fire, zeta_flip)
from cpfire.rng import make_rng


def test_condition_1_examples():
    ok = check_condition_1(4, 8, 2, 1, 1.65)
    assert ok.first_lhs == pytest.approx(8 / 3)
    assert ok.second_lhs == pytest.approx(2.0)
    assert ok.passed and ok.gamma == pytest.approx(8 * 2 / 6)
    bad = check_condition_1(2, 8, 2, 1, 1.65)
    assert not bad.second_pass and not bad.passed
    assert bad.first_pass
    assert check_condition_1(4, 8, 2, 1, 1.65).to_json().count('"passed": true') == 1


def test_condition_1_gamma():
    # gamma = beta2 * delta1 / (beta1 + delta1)
    assert check_condition_1(6, 8, 2, 1, 1.0).gamma == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        check_condition_1(1, 1, 0, 1, 1.6)
    with pytest.raises(ConfigError):
        check_condition_1(1, 1, 1, 1, 0)


@pytest.mark.parametrize("build", [
    lambda: ProcessSpec(Variant.CONTACT, ProcessParams(beta1=1, beta2=1, delta1=1)),
    lambda: ProcessSpec(Variant.RICHARDSON, ProcessParams(beta1=1, delta1=1)),
    lambda: ProcessSpec(Variant.ZETA_FLIP, ProcessParams(beta1=1, delta1=1)),
    lambda: ProcessSpec(Variant.TWO_TYPE_FIRE, ProcessParams(beta1=1, delta1=1, flip=True)),
    lambda: contact(2.0, initial=Initial("seed", 2)),
    lambda: contact(2.0, initial=Initial("random", p1=0.2, p2=0.1)),
    lambda: contact(2.0, window=-1),
    lambda: Initial("random", p1=0.7, p2=0.5),
    lambda: Initial("triangle"),
])
def test_spec_validation(build):
    with pytest.raises(ConfigError):
        build()


def test_block_initial_must_fit():
    spec = contact(2.0, size=5, initial=Initial("block", n=3))
    with pytest.raises(ConfigError):
        make_process(spec).new_lattice()


def test_window_gives_box():
    spec = contact(2.0, window=4)
    lat = make_process(spec).new_lattice()
    assert lat.width == 9 and spec.boundary.value == "box"
    assert lat.get(4, 4) == 1 and lat.n1 == 1


def test_richardson_never_shrinks():
    spec = richardson(1.0, kernel_from_weights(0.5, 0.5, 1.0, 4), size=40)
    _, tr = make_process(spec).run(Stop(6.0), make_rng(5), Observers(sample_times=np.linspace(0, 6, 61)))
    assert tr.n1[0] == 1
    assert np.all(np.diff(tr.n1) >= 0)
    assert tr.n1[-1] > 20
    assert tr.tally["DEATH1"] == 0


def test_contact_without_death_fills_torus():
    spec = contact(3.0, 0.0, size=10)
    lat, tr = make_process(spec).run(Stop(1e6, cap=100), make_rng(2))
    assert lat.n1 == 100


def test_zeta_flip_without_twos_relaxes_to_flip_balance():
    # each vacant site flips to 1 at rate b1 and back at rate d1, independently
    b1, d1 = 2.0, 1.0
    spec = zeta_flip(b1, d1, 3.0, 1.0, size=64, initial=Initial("empty"))
    times = [0.25, 0.5, 1.0, 8.0]
    _, tr = make_process(spec).run(Stop(8.0), make_rng(11), Observers(sample_times=times))
    N = 64 * 64
    for t, n1 in zip(times, tr.n1):
        p = b1 / (b1 + d1) * (1 - math.exp(-(b1 + d1) * t))
        assert abs(n1 / N - p) < 5 * math.sqrt(p * (1 - p) / N)
    assert np.all(tr.n2 == 0)


def test_zeta_flip_twos_stay_put_against_ones():
    # a lone 2 in a sea of 1's: 1's never overwrite 2's
    spec = zeta_flip(1.0, 0.0, 0.0, 0.0, size=8, initial=Initial("seed", 2))
    lat, _ = make_process(spec).run(Stop(20.0), make_rng(0))
    assert lat.n2 == 1 and lat.n1 == 63


def test_two_type_fire_default_initial_is_random():
    spec = two_type_fire(ProcessParams(beta1=1, beta2=1, delta1=1, delta2=1), size=100)
    lat = make_process(spec).new_lattice(make_rng(0))
    assert abs(lat.n1 / 1e4 - 0.25) < 0.03 and abs(lat.n2 / 1e4 - 0.25) < 0.03


def test_describe_round_trips_to_json():
    import json
    spec = contact(1.7, delta0=0.01, F=4, window=6)
    d = json.loads(json.dumps(spec.describe()))
    assert d["variant"] == "contact" and d["size"] == 13 and d["boundary"] == "box"
    assert d["params"]["block_side"] == 5


def test_two_type_density_below_flip_variant():
    # type 1 in the two-type process (no fires) is dominated by the independent-flip variant
    from scipy import stats

    from cpfire.analysis.replicates import run_replicates

    times = [0.5, 1.0, 2.0, 5.0]
    init = Initial("random", p1=0.25, p2=0.25)
    two = two_type_fire(ProcessParams(beta1=2.0, delta1=1.0, beta2=3.0, delta2=1.0), size=32, initial=init)
    flip = zeta_flip(2.0, 1.0, 3.0, 1.0, size=32, initial=init)

    def path(seed, spec):
        proc = make_process(spec)
        rng = make_rng(seed)
        _, tr = proc.run(Stop(times[-1]), rng, Observers(sample_times=times))
        return tr.n1

    a = np.array(run_replicates(path, 31, 200, two))
    b = np.array(run_replicates(path, 32, 200, flip))
    for j in range(len(times)):
        assert stats.ttest_ind(a[:, j], b[:, j], equal_var=False, alternative="greater").pvalue > 1e-3
    assert np.all(a.mean(axis=0) < b.mean(axis=0))
