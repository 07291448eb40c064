from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairvar.metametrics import (
    ALL_KINDS,
    MAX_ABS_DIFF,
    MAX_MIN_DIFF,
    MAX_MIN_RATIO,
    MEAN_ABS_DEV,
    VARIANCE,
    MetaMetricKind,
    UndefinedMetaMetricError,
    generalized_entropy,
    meta_metric,
    meta_metric_batch,
)


def oracle(y, kind):
    """Textbook formulas in exact rational arithmetic (integer alpha only)."""
    q = [Fraction(v).limit_denominator(10**9) for v in y]
    k = len(q)
    mean = sum(q) / k
    if kind.name == "max_min_diff":
        return max(q) - min(q)
    if kind.name == "max_min_ratio":
        return max(q) / min(q)
    if kind.name == "max_abs_diff":
        return max(abs(v - mean) for v in q)
    if kind.name == "mean_abs_dev":
        return sum(abs(v - mean) for v in q) / k
    if kind.name == "variance":
        return sum((v - mean) ** 2 for v in q) / (k - 1)
    a = int(kind.alpha)
    return sum((v / mean) ** a - 1 for v in q) / (k * a * (a - 1))


GEI2 = generalized_entropy(2)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.label)
def test_constant_vector(kind):
    expected = 1.0 if kind is MAX_MIN_RATIO else 0.0
    assert meta_metric([0.5, 0.5, 0.5], kind).value == expected


@pytest.mark.parametrize(
    "kind, expected",
    [
        (MAX_MIN_DIFF, 0.7),
        (MAX_MIN_RATIO, 4.5),
        (MAX_ABS_DIFF, 0.4),
        (MEAN_ABS_DEV, 0.8 / 3),
        (VARIANCE, 0.13),
    ],
    ids=lambda v: getattr(v, "label", str(v)),
)
def test_worked_example(kind, expected):
    res = meta_metric([0.2, 0.4, 0.9], kind)
    assert res.value == pytest.approx(expected, abs=1e-12)
    assert res.k == 3
    assert res.value == pytest.approx(float(oracle([0.2, 0.4, 0.9], kind)), abs=1e-12)


def test_gei_two_groups():
    assert meta_metric([0.2, 0.4], GEI2).value == pytest.approx(1 / 18, abs=1e-12)


@pytest.mark.parametrize("kind", [MAX_MIN_RATIO, GEI2], ids=lambda k: k.label)
def test_zero_rate_undefined(kind):
    with pytest.raises(UndefinedMetaMetricError, match="undefined for zero rate"):
        meta_metric([0.0, 0.5], kind)


def test_negative_rates_rejected_for_gei():
    with pytest.raises(UndefinedMetaMetricError):
        meta_metric([-0.1, 0.5], GEI2)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.label)
def test_needs_two_groups(kind):
    with pytest.raises(ValueError):
        meta_metric([0.3], kind)


@pytest.mark.parametrize("alpha", [0, 1, 0.0, 1.0])
def test_gei_rejects_alpha_zero_and_one(alpha):
    with pytest.raises(ValueError):
        generalized_entropy(alpha)


def test_parse():
    assert MetaMetricKind.parse("var") == VARIANCE
    assert MetaMetricKind.parse("gei:0.5") == generalized_entropy(0.5)
    assert MetaMetricKind.parse("generalized_entropy") == GEI2
    with pytest.raises(ValueError):
        MetaMetricKind.parse("gei:1")
    with pytest.raises(ValueError):
        MetaMetricKind.parse("median")


def test_batch_marks_undefined_rows_nan():
    y = np.array([[0.2, 0.4], [0.0, 0.5]])
    out = meta_metric_batch(y, MAX_MIN_RATIO)
    assert out[0] == 2.0 and np.isnan(out[1])


# -- properties -------------------------------------------------------------

rates = st.lists(st.floats(0.01, 1.0, allow_nan=False), min_size=2, max_size=12)


@given(rates)
def test_matches_exact_oracle(y):
    for kind in ALL_KINDS + (generalized_entropy(3), generalized_entropy(-1)):
        assert meta_metric(y, kind).value == pytest.approx(float(oracle(y, kind)), rel=1e-9, abs=1e-12)


@given(rates, st.randoms())
def test_permutation_invariance(y, rnd):
    shuffled = list(y)
    rnd.shuffle(shuffled)
    for kind in ALL_KINDS:
        assert meta_metric(shuffled, kind).value == pytest.approx(meta_metric(y, kind).value, rel=1e-12, abs=1e-15)


@given(st.floats(0.0, 1.0), st.integers(2, 20))
def test_any_constant_vector_has_no_spread(c, k):
    y = [c] * k
    for kind in ALL_KINDS:
        if kind.name in ("max_min_ratio", "generalized_entropy") and c == 0:
            continue
        expected = 1.0 if kind is MAX_MIN_RATIO else 0.0
        assert meta_metric(y, kind).value == expected


@given(rates, st.floats(0.1, 10.0))
def test_scale_behaviour(y, c):
    scaled = [c * v for v in y]
    for kind in (MAX_MIN_RATIO, GEI2, generalized_entropy(0.5)):
        assert meta_metric(scaled, kind).value == pytest.approx(meta_metric(y, kind).value, rel=1e-9, abs=1e-12)
    for kind in (MAX_MIN_DIFF, MAX_ABS_DIFF, MEAN_ABS_DEV):
        assert meta_metric(scaled, kind).value == pytest.approx(c * meta_metric(y, kind).value, rel=1e-9, abs=1e-12)
    assert meta_metric(scaled, VARIANCE).value == pytest.approx(c**2 * meta_metric(y, VARIANCE).value, rel=1e-9, abs=1e-12)


@given(rates)
def test_sign_constraints(y):
    for kind in (MAX_MIN_DIFF, MAX_ABS_DIFF, MEAN_ABS_DEV, VARIANCE):
        assert meta_metric(y, kind).value >= 0
    assert meta_metric(y, MAX_MIN_RATIO).value >= 1


# -- Monte-Carlo bias -----------------------------------------------------------


def _draws(mu, n, reps, seed):
    rng = np.random.default_rng(seed)
    return rng.binomial(n, mu, size=(reps, len(mu))) / n


@pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.label)
def test_naive_meta_metrics_are_biased_upward(kind):
    # many small groups with overlapping true rates: noise is non-degenerate
    mu = np.linspace(0.6, 0.9, 20)
    n = np.full(20, 30)
    y = _draws(mu, n, 2000, 11)
    diffs = meta_metric_batch(y, kind) - meta_metric_batch(mu, kind)
    se = diffs.std(ddof=1) / np.sqrt(diffs.size)
    assert diffs.mean() > 3 * se


def test_variance_bias_equals_mean_sampling_variance():
    mu = np.linspace(0.2, 0.8, 15)
    n = np.arange(15, 30)
    y = _draws(mu, n, 4000, 12)
    diffs = meta_metric_batch(y, VARIANCE) - meta_metric_batch(mu, VARIANCE)
    se = diffs.std(ddof=1) / np.sqrt(diffs.size)
    expected = (mu * (1 - mu) / n).mean()
    assert abs(diffs.mean() - expected) < 3 * se
