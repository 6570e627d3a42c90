"""Comparison forecasters: per-task GP (no stacking) and autoregression.

Both emit the same row schema as the stacked model so evaluation code
never knows which method produced a file.
"""

from dataclasses import dataclass

import numpy as np

from . import gp, tasks
from .errors import TooFewPoints
from .stacking import ForecastRow


@dataclass(frozen=True)
class ARModel:
    """Linear autoregression y_t ~ intercept + sum_k coef[k-1] * y_{t-k}.

    Fitted by least squares on column-centered lags, so a constant series
    degenerates to zero coefficients with the constant as intercept, and
    rank-deficient lag matrices take the minimum-norm solution.
    """

    order: int
    coefficients: np.ndarray
    intercept: float
    residual_variance: float


def fit_ar(series, order: int) -> ARModel:
    y = np.asarray(series, dtype=np.float64).ravel()
    if order < 1:
        raise ValueError(f"order must be at least 1, got {order}")
    if y.size <= order + 1:
        raise TooFewPoints(f"{y.size} points cannot fit AR({order})")

    rows = y.size - order
    Z = np.empty((rows, order))
    for k in range(1, order + 1):
        Z[:, k - 1] = y[order - k : order - k + rows]
    targets = y[order:]

    zm = Z.mean(axis=0)
    ym = targets.mean()
    coef, *_ = np.linalg.lstsq(Z - zm, targets - ym, rcond=None)
    intercept = float(ym - coef @ zm)
    resid = targets - (intercept + Z @ coef)
    return ARModel(
        order=order,
        coefficients=coef,
        intercept=intercept,
        residual_variance=float(np.mean(resid**2)),
    )


def forecast_ar(model: ARModel, history, horizon: int) -> np.ndarray:
    """Iterated multi-step forecast, feeding predictions back as lags."""
    buf = list(np.asarray(history, dtype=np.float64).ravel())
    if len(buf) < model.order:
        raise TooFewPoints(f"history of {len(buf)} is shorter than order {model.order}")
    out = []
    for _ in range(horizon):
        lags = buf[-1 : -model.order - 1 : -1]  # y_{t-1}, ..., y_{t-order}
        nxt = model.intercept + float(np.dot(model.coefficients, lags))
        out.append(nxt)
        buf.append(nxt)
    return np.array(out)


def fit_ar_tasks(train_panel, order=12, difference=False):
    """Per-task AR fits keyed by task id.

    The order is clipped per task so short histories stay fittable.
    difference fits on first differences (the forecast step integrates
    back), a light stand-in for a full ARIMA treatment.
    """
    models = {}
    for task in train_panel.tasks:
        series = np.diff(task.loads) if difference else task.loads
        k = max(1, min(order, series.size - 2))
        models[task.task_id] = fit_ar(series, k)
    return models


def ar_rows(models, train_panel, horizon_months, difference=False):
    """Forecast rows from fitted AR models.

    In difference mode the variance grows linearly with horizon; the
    plain AR's stays flat at the residual variance.
    """
    horizon_months = [int(m) for m in horizon_months]
    rows = []
    for task in sorted(train_panel.tasks, key=lambda t: t.task_id):
        y = task.loads
        series = np.diff(y) if difference else y
        model = models[task.task_id]
        steps = forecast_ar(model, series, len(horizon_months))
        if difference:
            means = y[-1] + np.cumsum(steps)
            variances = model.residual_variance * np.arange(1, len(steps) + 1)
        else:
            means = steps
            variances = np.full(len(steps), model.residual_variance)
        variances = np.maximum(variances, 1e-12)
        for m, mu, var in zip(horizon_months, means, variances):
            half = 1.96 * float(np.sqrt(var))
            rows.append(ForecastRow(task.task_id, m, float(mu), float(var), mu - half, mu + half))
    rows.sort(key=lambda r: (r.task_id, r.month))
    return rows


def run_ar_baseline(train_panel, horizon_months, order=12, difference=False):
    """Fit and forecast in one step; see fit_ar_tasks and ar_rows."""
    models = fit_ar_tasks(train_panel, order=order, difference=difference)
    return ar_rows(models, train_panel, horizon_months, difference=difference)


def task_gp_rows(summaries, horizon_months):
    """Forecast rows straight from stage-1 posterior summaries."""
    horizon_months = [int(m) for m in horizon_months]
    rows = []
    for summary in sorted(summaries, key=lambda s: s.task_id):
        if not horizon_months:
            continue
        means, variances = summary.at(horizon_months)
        for m, mu, var in zip(horizon_months, means, variances):
            half = 1.96 * float(np.sqrt(var))
            rows.append(
                ForecastRow(summary.task_id, m, float(mu), float(var), mu - half, mu + half)
            )
    rows.sort(key=lambda r: (r.task_id, r.month))
    return rows


def run_task_gp_baseline(train_panel, kernel_cfg, opt_cfg: gp.OptConfig, horizon_months):
    """Fit the per-task GPs and use them directly as forecasters."""
    _, summaries = tasks.fit_tasks(
        train_panel.tasks, kernel_cfg, opt_cfg, eval_times=horizon_months
    )
    return task_gp_rows(summaries, horizon_months)
