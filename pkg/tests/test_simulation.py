import numpy as np
import pytest

from fairvar.bootstrap import BootstrapConfig
from fairvar.simulation import (
    BiasSweepConfig,
    Scenario,
    bias_sweep,
    coverage_study,
    draw_replicate,
    replicate_study,
    single_draw_bootstrap,
    standard_scenarios,
)

EQ_EQ, UNEQ_EQ, EQ_UNEQ, UNEQ_UNEQ = standard_scenarios()


def closed_form_spaced_variance(lo, hi, k):
    # sample variance (K-1 divisor) of K equally spaced points on [lo, hi]
    step = (hi - lo) / (k - 1)
    return step**2 * k * (k + 1) / 12


def test_scenario_shapes():
    for s in standard_scenarios():
        assert s.k == 100
    assert set(EQ_EQ.n) == {50}
    assert min(UNEQ_EQ.n) == 10 and max(UNEQ_EQ.n) == 90
    assert set(range(10, 91)) <= set(UNEQ_UNEQ.n)
    assert EQ_UNEQ.mu[0] == pytest.approx(0.1) and EQ_UNEQ.mu[-1] == pytest.approx(0.9)


def test_true_variances():
    assert EQ_EQ.true_variance == 0.0
    assert UNEQ_EQ.true_variance == 0.0
    expected = closed_form_spaced_variance(0.1, 0.9, 100)
    assert expected == pytest.approx(0.054961, abs=1e-6)
    assert EQ_UNEQ.true_variance == pytest.approx(expected, abs=1e-12)
    assert UNEQ_UNEQ.true_variance == pytest.approx(expected, abs=1e-12)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario("x", (0.5,), (10,))
    with pytest.raises(ValueError):
        Scenario("x", (0.5, 1.2), (10, 10))
    with pytest.raises(ValueError):
        Scenario("x", (0.5, 0.5), (10, 0))
    with pytest.raises(ValueError):
        Scenario("x", (0.5, 0.5), (10,))


def test_degenerate_draw():
    s = Scenario("ones", (1.0,) * 5, (7,) * 5)
    g = draw_replicate(s, np.random.default_rng(0))
    assert np.all(g.y == 1.0)


def test_draw_moments_equal_scenario():
    rng = np.random.default_rng(100)
    ys = np.array([draw_replicate(EQ_EQ, rng).y for _ in range(1000)])
    flat = ys.ravel()
    se = flat.std(ddof=1) / np.sqrt(flat.size)
    assert abs(flat.mean() - 0.8) < 3 * se
    # variance of a per-group rate: 0.8 * 0.2 / 50
    assert flat.var(ddof=1) == pytest.approx(0.0032, rel=0.03)


def test_replicate_study_uncorrected_shift():
    rows = {s.scenario: s for s in replicate_study(replicates=400, seed=3)}
    for s in standard_scenarios():
        summary = rows[s.name]
        shift = summary.uncorrected.mean() - summary.true_variance
        se = summary.uncorrected.std(ddof=1) / np.sqrt(400)
        assert abs(shift - s.mean_sampling_variance) < 4 * se
        assert np.all(summary.corrected <= summary.uncorrected)


def test_replicate_study_is_reproducible():
    a = replicate_study(replicates=50, seed=9)
    b = replicate_study(replicates=50, seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.uncorrected, y.uncorrected)


# -- bias sweep ---------------------------------------------------------------------


def test_bias_sweep_config_validation():
    with pytest.raises(ValueError):
        BiasSweepConfig(k_grid=(1, 5))
    with pytest.raises(ValueError):
        BiasSweepConfig(lower_bounds=(0.95,))
    with pytest.raises(ValueError):
        BiasSweepConfig(total_n=10, k_grid=(50,))


def test_bias_sweep_fair_model_analytic_value():
    cfg = BiasSweepConfig(k_grid=(100,), lower_bounds=(0.9,), replicates=1000, seed=1)
    cells = {c.metric: c for c in bias_sweep(cfg)}
    var = cells["variance"]
    assert var.n_per_group == 50
    assert var.analytic_bias == pytest.approx(0.0018, abs=1e-12)
    assert abs(var.mean_bias - 0.0018) < 3 * var.mc_se
    for c in cells.values():
        assert c.mean_bias > 3 * c.mc_se


def test_bias_sweep_grows_with_k():
    cfg = BiasSweepConfig(k_grid=(10, 50, 150), lower_bounds=(0.7,), replicates=300, seed=2)
    var = [c for c in bias_sweep(cfg) if c.metric == "variance"]
    assert [c.k for c in var] == [10, 50, 150]
    assert var[0].mean_bias < var[1].mean_bias < var[2].mean_bias
    assert var[0].analytic_bias < var[1].analytic_bias < var[2].analytic_bias


def test_bias_sweep_counts_undefined_ratio_replicates():
    cfg = BiasSweepConfig(total_n=300, k_grid=(30,), lower_bounds=(0.1,), replicates=200, seed=3)
    cells = {c.metric: c for c in bias_sweep(cfg)}
    assert cells["max_min_ratio"].undefined > 0
    assert cells["variance"].undefined == 0


def test_bias_sweep_is_reproducible():
    cfg = BiasSweepConfig(k_grid=(5, 20), lower_bounds=(0.5,), replicates=100, seed=4)
    assert bias_sweep(cfg) == bias_sweep(cfg)


# -- coverage -----------------------------------------------------------------------


def test_coverage_study_small_is_deterministic_across_workers():
    scen = [EQ_UNEQ, UNEQ_EQ]
    cfg = BootstrapConfig(b=60, seed=12)
    a = coverage_study(scen, replicates=24, config=cfg)
    b = coverage_study(scen, replicates=24, config=cfg, workers=2)
    assert a == b
    assert len(a.rows) == 6
    for row in a.rows:
        assert 0 <= row.coverage <= 100
    # naive estimators never cover a true variance of zero
    assert a.coverage(UNEQ_EQ.name, "uncorrected") == 0.0


def test_coverage_study_rejects_unknown_estimator():
    with pytest.raises(ValueError):
        coverage_study([EQ_EQ], estimators=("reml",), replicates=2)


def test_single_corrected_interval_misses_zero_in_fair_scenarios():
    above = 0
    for seed in range(20):
        res = single_draw_bootstrap(UNEQ_EQ, BootstrapConfig(b=200, seed=seed), draw_seed=seed)
        above += res["corrected_variance"].lower > 0.0
    assert above >= 18


def test_double_corrected_interval_covers_truth_on_a_draw():
    res = single_draw_bootstrap(EQ_UNEQ, BootstrapConfig(b=500, seed=0), draw_seed=0)
    assert res["double_corrected_variance"].contains(EQ_UNEQ.true_variance)
