"""Cross-task stage: stacked feature rows and the ensemble GP over them.

Every (task, month) pair becomes one row built from five column groups:
recent loads, weather at the target month, encoded demographics, calendar
position, and the per-task GP posterior at the target month. Training rows
come only from gate-passed tasks' training months; test rows cover the
forecast horizon for every task.

Lag columns never read future observations. A lag month that falls before
the task's history or after the training boundary is padded with the
task's training-mean load, and a validity column records the observed
fraction, so the model can learn how much to trust padded windows — test
rows far into the horizon look exactly like that.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import gp, months
from .errors import ConfigError, LayoutMismatch, MissingCovariate, NoTrainableTasks
from .kernels import FeatureGroupKernel, Group, SquaredExponential
from .tasks import StackingGate

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LayoutConfig:
    """Feature layout knobs: lag depth, stage-1 variance switch, and which
    demographic fields are one-hot encoded vs taken as numbers."""

    n_lags: int = 12
    include_variance: bool = True
    categorical: tuple = ("income_band",)
    numeric: tuple = ("num_rooms",)

    def __post_init__(self):
        if self.n_lags < 1:
            raise ConfigError(f"n_lags must be at least 1, got {self.n_lags}")


@dataclass(frozen=True)
class StackedLayout:
    """Frozen result of fitting the layout to a training panel.

    demo_columns holds (field, category) pairs, category None for numeric
    fields. col_mean/col_std are the training-only standardization
    statistics applied to every row, train or test.
    """

    n_lags: int
    include_variance: bool
    demo_columns: tuple
    groups: tuple
    column_names: tuple
    col_mean: tuple
    col_std: tuple

    @property
    def width(self) -> int:
        return len(self.column_names)

    def apply(self, raw):
        raw = np.asarray(raw, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[1] != self.width:
            raise LayoutMismatch(f"rows have {raw.shape[-1]} columns, layout has {self.width}")
        return (raw - np.asarray(self.col_mean)) / np.asarray(self.col_std)


@dataclass(frozen=True)
class FeatureSet:
    """Assembled rows for one panel: standardized plus raw for inspection."""

    layout: StackedLayout
    passed: tuple
    train_keys: tuple
    X_train: np.ndarray
    y_train: np.ndarray
    X_train_raw: np.ndarray
    test_keys: tuple
    X_test: np.ndarray
    X_test_raw: np.ndarray


@dataclass(frozen=True)
class ForecastRow:
    task_id: str
    month: int
    mean: float
    variance: float
    lower95: float
    upper95: float


@dataclass(frozen=True)
class StackedModel:
    """Ensemble GP plus everything needed to rebuild its inputs."""

    model: gp.GPModel
    layout: StackedLayout
    gate: StackingGate
    passed: tuple
    summaries: dict


def _demo_columns(tasks, cfg: LayoutConfig):
    """One (field, category) column per observed category, then numerics.

    Categories are collected over the whole training panel and sorted, so
    the encoding does not depend on task order. Unseen categories at
    prediction time encode as all zeros.
    """
    cols = []
    for fld in cfg.categorical:
        values = sorted({str(t.demographics[fld]) for t in tasks if fld in t.demographics})
        cols.extend((fld, v) for v in values)
    cols.extend((fld, None) for fld in cfg.numeric)
    return tuple(cols)


def _demo_vector(task, demo_columns):
    out = np.zeros(len(demo_columns))
    for i, (fld, category) in enumerate(demo_columns):
        if category is None:
            if fld not in task.demographics:
                raise MissingCovariate(f"task {task.task_id}: no demographic field {fld!r}")
            out[i] = float(task.demographics[fld])
        else:
            out[i] = 1.0 if str(task.demographics.get(fld)) == category else 0.0
    return out


def _weather_vector(panel, task, month):
    row = panel.weather_row(task.region, month)
    if row is None or any(np.isnan(row)):
        raise MissingCovariate(
            f"no weather for region {task.region!r} at month {months.format_month(month)}"
        )
    return np.asarray(row, dtype=np.float64)


def _lag_vector(observed, train_mean, t, p):
    lags = np.full(p, train_mean)
    hit = 0
    for k in range(1, p + 1):
        v = observed.get(t - k)
        if v is not None:
            lags[k - 1] = v
            hit += 1
    return lags, hit / p


def _train_targets(times, p):
    # full lag windows when the history allows them (length-p prefix
    # dropped); otherwise one padded row per month after the first
    start = p if times.size >= p + 1 else 1
    return times[start:]


def _column_names(p, demo_columns, include_variance):
    names = [f"load.lag{k:02d}" for k in range(1, p + 1)] + ["load.valid"]
    names += ["wx.mean_temp_c", "wx.hdd", "wx.cdd"]
    names += [
        f"demo.{fld}" if category is None else f"demo.{fld}={category}"
        for fld, category in demo_columns
    ]
    names += ["moy.sin", "moy.cos", "hz.months"]
    names += ["s1.mean", "s1.var"] if include_variance else ["s1.mean"]
    return tuple(names)


def _group_ranges(p, n_demo, include_variance):
    # the sin/cos pair and the horizon stamp are separate kernel factors:
    # horizon values never overlap between training and forecast rows, so
    # a shared lengthscale would drag the seasonal encoding down with it
    widths = [p + 1, 3, n_demo, 2, 1, 2 if include_variance else 1]
    groups = []
    edge = 0
    for name, w in zip(("load", "wx", "demo", "moy", "hz", "s1"), widths):
        if w == 0:
            continue
        groups.append((name, edge, edge + w))
        edge += w
    return tuple(groups), edge


def _assemble(panel, summaries, p, include_variance, demo_columns, passed, horizon):
    """Raw row matrices for one panel under a fixed encoding."""
    train_end = panel.split[0]
    tasks = sorted((t for t in panel.tasks if t.task_id in summaries), key=lambda t: t.task_id)
    passed = set(passed)
    train_rows, train_keys, train_y = [], [], []
    test_rows, test_keys = [], []

    for task in tasks:
        observed = dict(zip(task.times.tolist(), task.loads.tolist()))
        train_mean = float(task.loads.mean()) if len(task) else 0.0
        demo = _demo_vector(task, demo_columns) if demo_columns else None
        summary = summaries[task.task_id]

        def row(t):
            t = int(t)
            lags, valid = _lag_vector(observed, train_mean, t, p)
            parts = [lags, [valid], _weather_vector(panel, task, t)]
            if demo is not None:
                parts.append(demo)
            moy = months.month_of_year(t)
            parts.append(
                [math.sin(_TWO_PI * moy / 12.0), math.cos(_TWO_PI * moy / 12.0), t - train_end]
            )
            mean, var = summary.at([t])
            parts.append([mean[0], var[0]] if include_variance else [mean[0]])
            return np.concatenate([np.asarray(q, dtype=np.float64) for q in parts])

        if task.task_id in passed:
            for t in _train_targets(task.times, p):
                train_rows.append(row(t))
                train_keys.append((task.task_id, int(t)))
                train_y.append(observed[int(t)])
        for t in horizon:
            test_rows.append(row(t))
            test_keys.append((task.task_id, int(t)))

    _, width = _group_ranges(p, len(demo_columns), include_variance)
    return (
        tuple(train_keys),
        np.array(train_rows).reshape(len(train_rows), width),
        np.array(train_y, dtype=np.float64),
        tuple(test_keys),
        np.array(test_rows).reshape(len(test_rows), width),
        tuple(sorted(passed & {t.task_id for t in tasks})),
    )


def build_features(panel, summaries, cfg: LayoutConfig, passed) -> FeatureSet:
    """Assemble train and test rows from a training-view panel.

    panel must carry its split; summaries map task_id to the stage-1
    posterior covering both training months and the horizon. passed lists
    the gate-admitted task ids; only they produce training rows.
    """
    if panel.split is None:
        raise ValueError("panel has no train/test split")
    train_end, test_end = panel.split
    horizon = range(train_end + 1, test_end + 1)
    p = cfg.n_lags

    fitted = sorted((t for t in panel.tasks if t.task_id in summaries), key=lambda t: t.task_id)
    demo_columns = _demo_columns(fitted, cfg)
    groups, width = _group_ranges(p, len(demo_columns), cfg.include_variance)

    train_keys, X_train_raw, y_train, test_keys, X_test_raw, passed = _assemble(
        panel, summaries, p, cfg.include_variance, demo_columns, passed, horizon
    )

    if X_train_raw.shape[0]:
        col_mean = X_train_raw.mean(axis=0)
        col_std = X_train_raw.std(axis=0)
        col_std = np.where(col_std > 1e-12, col_std, 1.0)
    else:
        col_mean = np.zeros(width)
        col_std = np.ones(width)

    layout = StackedLayout(
        n_lags=p,
        include_variance=cfg.include_variance,
        demo_columns=demo_columns,
        groups=groups,
        column_names=_column_names(p, demo_columns, cfg.include_variance),
        col_mean=tuple(float(v) for v in col_mean),
        col_std=tuple(float(v) for v in col_std),
    )
    return FeatureSet(
        layout=layout,
        passed=passed,
        train_keys=train_keys,
        X_train=layout.apply(X_train_raw),
        y_train=y_train,
        X_train_raw=X_train_raw,
        test_keys=test_keys,
        X_test=layout.apply(X_test_raw),
        X_test_raw=X_test_raw,
    )


def rebuild_features(panel, summaries, layout: StackedLayout, passed, horizon=None) -> FeatureSet:
    """Re-assemble rows under a stored layout (encoding and stats reused).

    Row construction is deterministic, so rebuilding from a saved model
    reproduces the original training matrix bit for bit; horizon may
    extend past the panel's recorded test window.
    """
    if panel.split is None:
        raise ValueError("panel has no train/test split")
    train_end, test_end = panel.split
    if horizon is None:
        horizon = range(train_end + 1, test_end + 1)
    train_keys, X_train_raw, y_train, test_keys, X_test_raw, passed = _assemble(
        panel, summaries, layout.n_lags, layout.include_variance,
        layout.demo_columns, passed, horizon,
    )
    return FeatureSet(
        layout=layout,
        passed=passed,
        train_keys=train_keys,
        X_train=layout.apply(X_train_raw),
        y_train=y_train,
        X_train_raw=X_train_raw,
        test_keys=test_keys,
        X_test=layout.apply(X_test_raw),
        X_test_raw=X_test_raw,
    )


def stacked_kernel(layout: StackedLayout, cfg=None) -> FeatureGroupKernel:
    """Product kernel matching the layout: one shared SE factor per group.

    cfg may set default variance/lengthscale and per-group overrides under
    "groups". The default lengthscale grows with group width, since
    standardized distances do.
    """
    cfg = dict(cfg or {})
    overrides = cfg.get("groups", {})
    groups = []
    for name, start, stop in layout.groups:
        o = overrides.get(name, {})
        variance = o.get("variance", cfg.get("variance", 1.0))
        lengthscale = o.get(
            "lengthscale", cfg.get("lengthscale", math.sqrt(float(stop - start)))
        )
        groups.append(Group(name, start, stop, SquaredExponential(variance, lengthscale)))
    return FeatureGroupKernel(groups)


def fit_stacked(
    features: FeatureSet, kernel_cfg, opt_cfg: gp.OptConfig, gate: StackingGate, summaries
) -> StackedModel:
    if features.X_train.shape[0] < 2 or not features.passed:
        raise NoTrainableTasks(
            f"{features.X_train.shape[0]} training rows from {len(features.passed)} gated tasks"
        )
    kernel = stacked_kernel(features.layout, kernel_cfg)
    model = gp.fit(kernel, features.X_train, features.y_train, opt_cfg)
    return StackedModel(
        model=model,
        layout=features.layout,
        gate=gate,
        passed=features.passed,
        summaries=dict(summaries),
    )


def predict_stacked(smodel: StackedModel, features: FeatureSet, include_noise=True):
    """Forecast every test row, sorted by (task_id, month)."""
    if features.X_test.shape[0] == 0:
        return []
    dist = gp.predict(smodel.model, features.X_test, include_noise=include_noise)
    rows = [
        ForecastRow(tid, month, float(m), float(v), float(lo), float(hi))
        for (tid, month), m, v, lo, hi in zip(
            features.test_keys, dist.mean, dist.variance, dist.lower95, dist.upper95
        )
    ]
    rows.sort(key=lambda r: (r.task_id, r.month))
    return rows
