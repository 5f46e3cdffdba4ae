import math
import warnings

import numpy as np
import pytest

from cpfire.analysis.blocks import (BlockCriterionConfig, block_event_prob, fire_avoidance_mc, fire_gap_mc,
                                    full_squares, lattice_fire_gap_probability, spread_mc)
from cpfire.analysis.coexist import coexistence_run, is_declining
from cpfire.analysis.critical import LambdaScales, decay_ratio, estimate_lambda_c, is_supercritical
from cpfire.analysis.formulas import (block_unaffected_prob, fire_gap_probability, spread_rate,
                                      spread_success_bound)
from cpfire.analysis.gap import GapExperimentConfig, gap_experiment, gap_horizon
from cpfire.analysis.replicates import run_replicates
from cpfire.analysis.shape import duality_check, shape_measure
from cpfire.analysis.source import SourceGridConfig, rebuild_kernel, source_propagation
from cpfire.analysis.stats import mean_estimate, merge_proportions, proportion, wilson_interval, z_score
from cpfire.analysis.survival import survival_probability
from cpfire.analysis.zeta import flip_limit_gap
from cpfire.engine import ProcessParams
from cpfire.errors import BracketError, ConfigError, PreconditionError
from cpfire.kernels import kernel_from_weights, moore_kernel, normalize_weights
from cpfire.processes import Initial, contact, richardson

# ---------------------------------------------------------------- closed forms


def test_block_unaffected_examples():
    assert block_unaffected_prob(0, 10, 5, 1, 3) == 1.0
    assert block_unaffected_prob(1e-4, 10, 5, 1, 3) == pytest.approx(math.exp(-0.25), rel=1e-12)
    assert block_unaffected_prob(1e-4, 10, 5, 1, 3) == pytest.approx(0.7788008, abs=1e-7)
    assert block_unaffected_prob(math.inf, 10, 5, 1, 3) == 0.0
    assert block_unaffected_prob(1e6, 10, 5, 1, 3) == 0.0
    with pytest.raises(ConfigError):
        block_unaffected_prob(-1, 10, 5, 1, 3)


def test_fire_gap_examples():
    assert fire_gap_probability(0, 200, 100, 10) == 0.0
    assert fire_gap_probability(1e-6, 100, 100, 10) == 0.0
    v = fire_gap_probability(1e-6, 200, 100, 10)
    assert v == pytest.approx((1 - math.exp(-0.05)) * math.exp(-1.4), rel=1e-12)
    assert v == pytest.approx(0.012027, abs=5e-7)
    with pytest.raises(ConfigError):
        fire_gap_probability(1e-6, 50, 100, 10)


def test_spread_bound_examples():
    assert spread_rate(1, 1, 1, 1, 2, 2) == pytest.approx(0.25)
    assert spread_success_bound(1, 1, 1, 1, 2, 2, 2) == pytest.approx(1 - math.exp(-0.25), rel=1e-12)
    assert spread_success_bound(1, 1, 1, 1, 2, 2, 2) == pytest.approx(0.22120, abs=5e-6)
    assert spread_success_bound(1, 1, 1, 1, 2, 2, 0) == 0.0
    assert spread_success_bound(math.inf, 1, 1, 1, 2, 2, 2) == 1.0
    assert spread_success_bound(1e12, 1, 1, 1, 2, 2, 2) == 1.0
    with pytest.raises(ConfigError):
        spread_success_bound(0, 1, 1, 1, 2, 2, 2)


def test_fire_gap_monotone_grid():
    for d0 in (1e-6, 1e-5, 1e-4):
        for T in (1.0, 10.0):
            for F in (4, 16, 64):
                ws = np.arange(F, F + 400, 7)
                vals = np.array([fire_gap_probability(d0, w, F, T) for w in ws])
                # strictly increasing until the first factor rounds to 1 in floating point
                assert np.all((np.diff(vals) > 0) | (vals[1:] == vals[:-1]) & (vals[1:] > 0.99 * vals.max()))
            for W in (64, 200):
                fs = np.arange(0, W + 1, 3)
                vals = [fire_gap_probability(d0, W, f, T) for f in fs]
                assert np.all(np.diff(vals) < 0)


def test_lattice_fire_gap_matches_formula_shape():
    # admissible and touching counts (W-2r)^2 and (4r+1)^2 for even F = 2r
    v = lattice_fire_gap_probability(1e-3, 4, 20, 4)
    assert v == pytest.approx(-math.expm1(-1e-3 * 256 * 2) * math.exp(-1e-3 * 81 * 14))

# ---------------------------------------------------------------- statistics


def test_wilson_interval_properties():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(0, 50)
    assert lo == 0.0 and 0 < hi < 0.1
    lo, hi = wilson_interval(50, 50)
    assert hi == 1.0 and 0.9 < lo < 1
    lo, hi = wilson_interval(30, 100)
    assert lo < 0.3 < hi
    # reference values for k=30, n=100
    assert (lo, hi) == pytest.approx((0.2189, 0.3958), abs=1e-4)


def test_proportion_and_merge():
    e = proportion(0, 0, "x")
    assert math.isnan(e.value) and e.replicates == 0 and math.isnan(e.sigma)
    parts = [proportion(3, 10, "m", 1), proportion(7, 20, "m", 1), proportion(0, 5, "m", 1)]
    a = merge_proportions(parts)
    b = merge_proportions(parts[::-1])
    assert a == b and a.successes == 10 and a.replicates == 35
    assert a.sigma == pytest.approx(math.sqrt(10 / 35 * 25 / 35 / 35))


def test_mean_estimate_and_z():
    m = mean_estimate([1.0, 2.0, 3.0, 4.0], "mean")
    assert m.value == 2.5 and m.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert z_score(1.0, 1.0, 0.0) == 0.0 and z_score(2.0, 1.0, 0.0) == math.inf
    assert z_score(1.3, 1.0, 0.1) == pytest.approx(3.0)


def test_replicates_schedule_invariant():
    args = (1e-3, 4, 2, 1, 2.0)
    from cpfire.analysis.blocks import _fire_avoid_replicate
    a = run_replicates(_fire_avoid_replicate, 5, 12, *args)
    b = run_replicates(_fire_avoid_replicate, 5, 12, *args, workers=2)
    c = run_replicates(_fire_avoid_replicate, 5, 6, *args) + run_replicates(_fire_avoid_replicate, 5, 6, *args,
                                                                             start=6)
    assert a == b == c

# ---------------------------------------------------------------- Monte Carlo vs closed forms


def test_fire_avoidance_matches_closed_form():
    d0, F, L, n, T = 1e-3, 4, 2, 1, 2.0
    est = fire_avoidance_mc(d0, F, L, n, T, replicates=3000, base_seed=1)
    exact = block_unaffected_prob(d0, F, L, n, T)
    assert abs(est.value - exact) < 3 * math.sqrt(exact * (1 - exact) / 3000)


def test_fire_gap_matches_lattice_form():
    d0, F, W, T = 1e-3, 4, 20, 4.0
    est = fire_gap_mc(d0, F, W, T, replicates=3000, base_seed=2)
    exact = lattice_fire_gap_probability(d0, F, W, T)
    assert abs(est.value - exact) < 3 * math.sqrt(exact * (1 - exact) / 3000)


def test_spread_matches_closed_form():
    k, W, L, rho, beta1, T = 1, 2, 2, 1.0, 5.0, 2.0
    c1, c2 = normalize_weights(0.5, 0.5, rho, 4 * k * W)
    est = spread_mc(c1, c2, rho, beta1, k, W, L, T, replicates=3000, base_seed=3)
    exact = spread_success_bound(c2, beta1, k, W, rho, L, T)
    assert abs(est.value - exact) < 3 * math.sqrt(exact * (1 - exact) / 3000)

# ---------------------------------------------------------------- blocks, survival, critical value


def test_full_squares():
    occ = np.zeros((6, 6), dtype=bool)
    occ[1:4, 2:5] = True
    f = full_squares(occ, 1)
    assert f.shape == (4, 4)
    assert f.sum() == 1 and f[1, 2]


def test_block_events_trivial():
    cfg = BlockCriterionConfig(n=1, L=2, T=10.0)
    top, side = block_event_prob(cfg, beta=0.0, replicates=50)
    assert top.value == 0 and side.value == 0
    top, side = block_event_prob(cfg, beta=2.0, delta=0.0, replicates=20)
    assert top.value == 1 and side.value == 1
    with pytest.raises(ConfigError):
        BlockCriterionConfig(n=0, L=2, T=1.0)


def test_survival_trivial():
    assert survival_probability(contact(0.0, 1.0, size=9, initial=Initial("full")), 30.0, 40).value == 0
    assert survival_probability(richardson(1.0, size=9), 5.0, 40).value == 1
    with pytest.raises(ValueError):
        survival_probability(richardson(1.0), 1.0, 0)


SMALL = LambdaScales(size=16, t_max=20.0, decay_replicates=2, survival_replicates=100,
                     lam_lo=0.5, lam_hi=4.0, rel_tol=0.2)


@pytest.mark.parametrize("method", ["density-decay", "survival-crossing"])
def test_lambda_probes(method):
    k = moore_kernel()
    assert not is_supercritical(k, 0.01, method, SMALL)
    assert is_supercritical(k, 100.0, method, SMALL)
    assert decay_ratio(k, 0.01, method, SMALL) < 0.1


def test_lambda_bracket_errors():
    k = moore_kernel()
    with pytest.raises(BracketError):
        estimate_lambda_c(k, "density-decay", LambdaScales(size=16, t_max=20.0, lam_lo=50, lam_hi=100))
    with pytest.raises(BracketError):
        estimate_lambda_c(k, "density-decay", LambdaScales(size=16, t_max=20.0, lam_lo=0.01, lam_hi=0.02))
    with pytest.raises(ConfigError):
        estimate_lambda_c(k, "magic", SMALL)


def test_lambda_estimate_small_scale():
    est = estimate_lambda_c(moore_kernel(), "density-decay", SMALL)
    lo, hi = est.ci95
    assert lo <= est.value <= hi and (hi - lo) / est.value < 0.2
    assert 0.5 < est.value < 4.0

# ---------------------------------------------------------------- shape and duality


def test_shape_richardson_monotone():
    d = shape_measure(richardson(1.0, size=61), 12.0, np.linspace(0, 12, 25), seed=4)
    assert d.area[0] == 1 and d.hit_set(0.0)[d.origin[1], d.origin[0]]
    assert np.all(np.diff(d.area) >= 0)
    assert np.all(np.diff(d.extents, axis=0) >= 0)
    assert d.valid.all()
    assert 0 < d.inner_speed <= d.outer_speed
    assert np.all(d.convexity <= 1 + 1e-9)


def test_shape_rejects_box_and_multitype():
    with pytest.raises(ConfigError):
        shape_measure(richardson(1.0, window=10), 1.0)


def test_shape_coupled_region_small():
    d = shape_measure(contact(4.0, 1.0, size=41), 6.0, np.linspace(0, 6, 7), seed=1, coupled=True)
    assert len(d.coupled) == 7
    assert np.all((d.coupled_inner_fraction >= 0) & (d.coupled_inner_fraction <= 1))


def test_duality_small():
    e1, e2, z = duality_check(1.0, [(0, 0)], [(3, 1), (3, 2)], 2.0, replicates=1500, size=21)
    assert abs(z) < 4
    assert 0 < e1.value < 1
    with pytest.raises(ConfigError):
        duality_check(1.0, [(0, 0)], [(0, 0)], 1.0, replicates=1)

# ---------------------------------------------------------------- gap, source, coexistence, flip limit


def test_gap_config_geometry():
    c = GapExperimentConfig(L=4, r1=1.5, r2=2.5, T=3.0)
    assert (c.half1, c.half2, c.half3, c.F) == (4, 6, 10, 21)
    assert c.size == 2 * (10 + 8) + 1
    assert gap_horizon(7, 2.0) == pytest.approx(4.0)
    for bad in [dict(r1=0.9, r2=2), dict(r1=2, r2=1.5), dict(r1=1.5, r2=1.6)]:
        with pytest.raises(ConfigError):
            GapExperimentConfig(L=4, T=1.0, **bad)


def test_gap_frozen_twos_never_invade():
    cfg = GapExperimentConfig(L=3, r1=1.5, r2=2.5, T=2.0)
    p = ProcessParams(beta1=3.0, delta1=1.0, beta2=0.0, delta2=1.0, delta0=0.5, F=4)
    est_i, est_ii = gap_experiment(cfg, p, replicates=20)
    assert est_ii.value == 1.0
    assert est_i.replicates <= 20


def test_source_config_geometry():
    c = SourceGridConfig(F=16, alpha=0.5)
    assert (c.blocks, c.W, c.M) == (4, 80, 1280)
    assert c.checkpoints[0] == 2 * c.T and c.checkpoints[-1] == 4 * c.T and len(c.checkpoints) == 17
    with pytest.raises(ConfigError):
        SourceGridConfig(F=1, alpha=0.0, L=5)
    k = kernel_from_weights(0.5, 0.5, 1.5, 8)
    k2 = rebuild_kernel(k, 40)
    assert k2.M == 40 and k2.c1 == k.c1 and abs(k2.total_mass - 1) < 1e-12
    assert rebuild_kernel(moore_kernel(), 40).M == 1


def test_source_trivial_zero():
    cfg = SourceGridConfig(F=4, alpha=0.5, k=1, L=1, T=2.0)
    short = ProcessParams(beta1=3.0, delta1=1.0, beta2=2.0, delta2=1.0, delta0=0.01, F=4)
    assert source_propagation(cfg, short, replicates=4).value == 0
    nofire = ProcessParams(beta1=3.0, delta1=1.0, beta2=2.0, delta2=1.0, delta0=0.0, F=4,
                           kernel1=kernel_from_weights(0.5, 0.5, 1.0, 4))
    assert source_propagation(cfg, nofire, replicates=4).value == 0


def test_source_warns_when_bound_vacuous():
    cfg = SourceGridConfig(F=4, alpha=0.5, k=1, L=1, T=0.5)
    p = ProcessParams(beta1=1.0, delta1=1.0, beta2=1.0, delta2=1.0, kernel1=kernel_from_weights(0.5, 0.5, 2.0, 4))
    with pytest.warns(UserWarning):
        source_propagation(cfg, p, replicates=1)


def test_is_declining():
    assert is_declining([0.5, 0.4, 0.1, 0.0, 0.0])
    assert not is_declining([0.5, 0.5, 0.4])
    assert not is_declining([0.5, 0.6])
    assert not is_declining([0.5])


P2 = ProcessParams(beta1=4.0, delta1=1.0, beta2=3.0, delta2=1.0, delta0=0.01, F=4)


def test_coexist_trivial_starts():
    r = coexistence_run(P2, 5.0, replicates=4, size=16, initial=Initial("empty"), samples=3)
    assert r.survive1.value == 0 and r.survive2.value == 0
    assert np.all(r.density1 == 0) and r.control_declines is True
    r = coexistence_run(P2, 5.0, replicates=4, size=16, initial=Initial("full", 2), samples=3)
    assert r.survive1.value == 0 and r.control_survive1.value == 0
    assert np.all(np.isnan(r.control_density2[1:]))


def test_coexist_precondition():
    with pytest.raises(PreconditionError):
        coexistence_run(P2, 1.0, replicates=1, size=8, lambda_c=1.65)
    r = coexistence_run(ProcessParams(beta1=20, delta1=10, beta2=5.7, delta2=1), 1.0, replicates=1, size=8,
                        lambda_c=1.44, control=False)
    assert r.condition["passed"] and r.control_density1 is None and r.control_declines is None


def test_flip_limit_small():
    pts = flip_limit_gap(1.0, [1.0, 10.0], 4.0, size=12, t_max=4.0, samples=5, replicates=6, bootstrap=20)
    assert [p.delta1 for p in pts] == [1.0, 10.0]
    assert all(p.gamma == pytest.approx(2.0) for p in pts)
    assert all(p.gap.value >= 0 and p.gap.stderr >= 0 for p in pts)
    assert pts[0].density_flip[0] == 1.0 and pts[0].density_contact[0] == 1.0
    with pytest.raises(ConfigError):
        flip_limit_gap(0.0, [1.0], 1.0)


def test_no_stray_warnings_from_formulas():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fire_gap_probability(1e-5, 40, 8, 3)
        block_unaffected_prob(1e-5, 8, 2, 1, 3)
