"""Point and interval accuracy scores and their invariances."""

import numpy as np
import pytest

from gpstack import metrics
from gpstack.errors import DimensionMismatch, EmptyInput, ZeroVariance


def test_mae_hand_example():
    assert metrics.mae([1.0, 2.0], [1.0, 3.0]) == pytest.approx(0.5)


def test_mae_translation_invariant_and_scale_linear():
    rng = np.random.default_rng(0)
    a, p = rng.standard_normal(30), rng.standard_normal(30)
    base = metrics.mae(a, p)
    assert metrics.mae(a + 100.0, p + 100.0) == pytest.approx(base, rel=1e-12)
    assert metrics.mae(3.0 * a, 3.0 * p) == pytest.approx(3.0 * base, rel=1e-12)


def test_r2_perfect_prediction_is_one():
    a = np.array([1.0, 2.0, 4.0])
    assert metrics.r2(a, a) == pytest.approx(1.0)


def test_r2_mean_prediction_is_zero():
    a = np.array([1.0, 2.0, 4.0])
    assert metrics.r2(a, np.full(3, a.mean())) == pytest.approx(0.0, abs=1e-15)


def test_r2_worse_than_mean_is_negative():
    a = np.array([1.0, 2.0, 3.0])
    assert metrics.r2(a, [3.0, 1.0, 5.0]) < 0.0


def test_r2_unaffected_by_affine_change_of_units():
    rng = np.random.default_rng(1)
    a, p = rng.standard_normal(25), rng.standard_normal(25)
    base = metrics.r2(a, p)
    assert metrics.r2(4.2 * a - 7.0, 4.2 * p - 7.0) == pytest.approx(base, rel=1e-10)


def test_r2_rejects_constant_actuals():
    with pytest.raises(ZeroVariance):
        metrics.r2([5.0, 5.0, 5.0], [4.0, 5.0, 6.0])


def test_coverage_counts_inclusive_ends():
    got = metrics.coverage([1.0, 2.0, 3.0], [1.0, 2.5, 0.0], [1.5, 3.0, 3.0])
    assert got == pytest.approx(2.0 / 3.0)


def test_coverage_full_and_empty():
    a = np.arange(5.0)
    assert metrics.coverage(a, a - 1.0, a + 1.0) == 1.0
    assert metrics.coverage(a, a + 0.5, a + 1.0) == 0.0


def test_coverage_of_calibrated_gaussian_intervals():
    # 10000 standard normal draws against their own 95% band
    rng = np.random.default_rng(42)
    draws = rng.standard_normal(10_000)
    got = metrics.coverage(draws, np.full(10_000, -1.96), np.full(10_000, 1.96))
    assert abs(got - 0.95) <= 0.01


def test_scores_are_permutation_invariant():
    rng = np.random.default_rng(2)
    a, p = rng.standard_normal(40), rng.standard_normal(40)
    lo, hi = p - 1.0, p + 1.0
    perm = rng.permutation(40)
    assert metrics.mae(a[perm], p[perm]) == pytest.approx(metrics.mae(a, p), rel=1e-12)
    assert metrics.r2(a[perm], p[perm]) == pytest.approx(metrics.r2(a, p), rel=1e-12)
    assert metrics.coverage(a[perm], lo[perm], hi[perm]) == metrics.coverage(a, lo, hi)


def test_shape_and_emptiness_checks():
    with pytest.raises(DimensionMismatch):
        metrics.mae([1.0], [1.0, 2.0])
    with pytest.raises(EmptyInput):
        metrics.mae([], [])
    with pytest.raises(DimensionMismatch):
        metrics.coverage([1.0], [0.0, 0.0], [2.0])
    with pytest.raises(EmptyInput):
        metrics.coverage([], [], [])


def test_evaluate_pools_and_splits_by_region():
    actual = np.array([10.0, 20.0, 30.0, 40.0])
    predicted = np.array([12.0, 18.0, 33.0, 35.0])
    lower = predicted - 4.0
    upper = predicted + 4.0
    regions = ["VIC", "VIC", "NSW", "NSW"]
    report = metrics.evaluate(actual, predicted, lower, upper, regions=regions)
    assert report.n == 4
    assert report.mae == pytest.approx(metrics.mae(actual, predicted))
    assert set(report.regions) == {"VIC", "NSW"}
    assert report.regions["VIC"]["n"] == 2
    assert report.regions["VIC"]["mae"] == pytest.approx(2.0)
    assert report.regions["NSW"]["coverage95"] == pytest.approx(0.5)
    doc = report.to_dict()
    assert list(doc["regions"]) == ["NSW", "VIC"]  # sorted for stable files


def test_evaluate_without_regions_has_empty_breakdown():
    report = metrics.evaluate([1.0, 2.0], [1.0, 3.0], [0.0, 2.0], [2.0, 4.0])
    assert report.regions == {}
    assert report.coverage95 == pytest.approx(1.0)
