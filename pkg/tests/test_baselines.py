"""Autoregressive and per-task-GP reference forecasters."""

import numpy as np
import pytest

from gpstack import baselines
from gpstack.errors import TooFewPoints
from gpstack.tasks import PosteriorSummary, TaskSeries


def ar1_series(phi, c, n, y0=0.0, noise=None, seed=0):
    y = np.empty(n)
    y[0] = y0
    eps = np.zeros(n) if noise is None else noise * np.random.default_rng(seed).standard_normal(n)
    for t in range(1, n):
        y[t] = c + phi * y[t - 1] + eps[t]
    return y


def test_recovers_noiseless_ar1_coefficient():
    y = ar1_series(0.5, 50.0, 30, y0=40.0)
    model = baselines.fit_ar(y, order=1)
    assert model.coefficients[0] == pytest.approx(0.5, abs=1e-6)
    assert model.intercept == pytest.approx(50.0, abs=1e-4)
    assert model.residual_variance < 1e-12


def test_constant_series_becomes_intercept_only():
    model = baselines.fit_ar(np.full(20, 7.25), order=3)
    np.testing.assert_allclose(model.coefficients, 0.0, atol=1e-12)
    assert model.intercept == pytest.approx(7.25, abs=1e-12)


def test_zero_coefficients_forecast_the_intercept():
    model = baselines.ARModel(
        order=2, coefficients=np.zeros(2), intercept=3.0, residual_variance=1.0
    )
    np.testing.assert_array_equal(
        baselines.forecast_ar(model, [10.0, 20.0], 4), np.full(4, 3.0)
    )


def test_unit_coefficient_repeats_the_last_value():
    model = baselines.ARModel(
        order=1, coefficients=np.ones(1), intercept=0.0, residual_variance=1.0
    )
    np.testing.assert_array_equal(
        baselines.forecast_ar(model, [1.0, 2.0, 5.0], 3), np.full(3, 5.0)
    )


def test_multi_step_forecast_matches_hand_recursion():
    model = baselines.ARModel(
        order=2,
        coefficients=np.array([0.6, 0.3]),  # y_{t-1}, y_{t-2}
        intercept=1.0,
        residual_variance=0.5,
    )
    history = [2.0, 4.0]
    f1 = 1.0 + 0.6 * 4.0 + 0.3 * 2.0
    f2 = 1.0 + 0.6 * f1 + 0.3 * 4.0
    f3 = 1.0 + 0.6 * f2 + 0.3 * f1
    np.testing.assert_allclose(
        baselines.forecast_ar(model, history, 3), [f1, f2, f3], rtol=1e-15
    )


def test_least_squares_residuals_satisfy_normal_equations():
    rng = np.random.default_rng(3)
    y = ar1_series(0.7, 10.0, 60, y0=30.0, noise=2.0, seed=3)
    model = baselines.fit_ar(y, order=3)
    rows = y.size - 3
    Z = np.column_stack([y[3 - k : 3 - k + rows] for k in (1, 2, 3)])
    resid = y[3:] - (model.intercept + Z @ model.coefficients)
    # orthogonal to each centered regressor and to the intercept column
    assert abs(resid.sum()) <= 1e-8 * np.abs(y).sum()
    for k in range(3):
        col = Z[:, k] - Z[:, k].mean()
        assert abs(resid @ col) <= 1e-8 * np.abs(col @ col)
    assert model.residual_variance == pytest.approx(np.mean(resid**2), rel=1e-12)


def test_not_enough_points_for_the_order():
    with pytest.raises(TooFewPoints):
        baselines.fit_ar(np.arange(5.0), order=4)
    with pytest.raises(TooFewPoints):
        baselines.fit_ar(np.arange(4.0), order=3)
    baselines.fit_ar(np.arange(5.0), order=3)  # boundary: 5 > 3 + 1


def test_order_must_be_positive():
    with pytest.raises(ValueError):
        baselines.fit_ar(np.arange(10.0), order=0)


def test_history_shorter_than_order_cannot_forecast():
    model = baselines.ARModel(
        order=3, coefficients=np.zeros(3), intercept=0.0, residual_variance=1.0
    )
    with pytest.raises(TooFewPoints):
        baselines.forecast_ar(model, [1.0, 2.0], 2)


def task(task_id, loads):
    t = np.arange(100, 100 + len(loads))
    return TaskSeries(
        task_id=task_id,
        region="VIC",
        times=t,
        loads=np.asarray(loads, dtype=np.float64),
        weather=np.zeros((len(loads), 3)),
        demographics={"income_band": "mid", "num_rooms": 2},
    )


class FakePanel:
    def __init__(self, tasks):
        self.tasks = tuple(tasks)


def test_order_clips_to_short_histories():
    panel = FakePanel([task("S", np.arange(6.0)), task("L", np.arange(30.0))])
    models = baselines.fit_ar_tasks(panel, order=12)
    assert models["S"].order == 4  # 6 points cannot support AR(12)
    assert models["L"].order == 12


def test_difference_mode_integrates_and_widens():
    y = 100.0 + 3.0 * np.arange(20) + np.random.default_rng(5).normal(0, 0.5, 20)
    panel = FakePanel([task("T", y)])
    horizon = [120, 121, 122, 123]
    rows = baselines.run_ar_baseline(panel, horizon, order=2, difference=True)
    plain = baselines.run_ar_baseline(panel, horizon, order=2, difference=False)

    variances = np.array([r.variance for r in rows])
    steps = variances / variances[0]
    np.testing.assert_allclose(steps, [1.0, 2.0, 3.0, 4.0], rtol=1e-9)
    flat = np.array([r.variance for r in plain])
    np.testing.assert_allclose(flat, flat[0], rtol=1e-12)
    # a drifting series defeats the plain AR's pull toward its mean
    assert rows[-1].mean > plain[-1].mean


def test_empty_horizon_produces_no_rows():
    panel = FakePanel([task("T", np.arange(20.0))])
    assert baselines.run_ar_baseline(panel, [], order=2) == []


def test_forecast_rows_are_sorted_and_banded():
    panel = FakePanel([task("B", np.arange(20.0) + 5), task("A", np.arange(20.0))])
    rows = baselines.run_ar_baseline(panel, [121, 120], order=2)
    assert [(r.task_id, r.month) for r in rows] == [
        ("A", 120), ("A", 121), ("B", 120), ("B", 121)
    ]
    for r in rows:
        assert r.lower95 <= r.mean <= r.upper95
        assert r.variance > 0.0


def test_task_gp_rows_read_the_posterior_summaries():
    t = np.arange(100, 130)
    summary = PosteriorSummary(
        task_id="Z",
        eval_times=t,
        means=2.0 * t.astype(np.float64),
        variances=np.full(t.size, 4.0),
        train_mpe=0.2,
    )
    rows = baselines.task_gp_rows([summary], [112, 110])
    assert [(r.task_id, r.month) for r in rows] == [("Z", 110), ("Z", 112)]
    assert rows[0].mean == pytest.approx(220.0)
    assert rows[0].upper95 == pytest.approx(220.0 + 1.96 * 2.0)
    assert baselines.task_gp_rows([summary], []) == []
