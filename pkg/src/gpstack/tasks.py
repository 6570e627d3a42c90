"""Per-household stage: one seasonal GP per task, scored and gated.

Each task is a short monthly consumption series. A 1-D GP over month
indices produces posterior means and variances on the training months and
the forecast horizon; the training-window mean percentage error decides
whether the task is clean enough to train the cross-task stage.
"""

import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import gp
from .errors import DimensionMismatch, EmptyInput, TooFewPoints
from .kernels import kernel_from_config

WEATHER_COLS = ("mean_temp_c", "hdd", "cdd")

# per-term ceiling for mean percentage error; keeps near-zero actuals from
# swamping the average while still flagging the fit as bad
MPE_CAP = 10.0


@dataclass(frozen=True)
class TaskSeries:
    """One household's observed months plus static covariates.

    times are month indices (months since the epoch), strictly increasing;
    weather rows align 1:1 with times, columns as in WEATHER_COLS.
    """

    task_id: str
    region: str
    times: np.ndarray
    loads: np.ndarray
    weather: np.ndarray
    demographics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=np.int64))
        object.__setattr__(self, "loads", np.asarray(self.loads, dtype=np.float64))
        w = np.asarray(self.weather, dtype=np.float64)
        w = w.reshape(self.times.size, len(WEATHER_COLS) if w.size == 0 else -1)
        object.__setattr__(self, "weather", w)
        if self.times.ndim != 1 or self.loads.shape != self.times.shape:
            raise DimensionMismatch(
                f"task {self.task_id}: times and loads must be equal-length vectors"
            )
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValueError(f"task {self.task_id}: times must be strictly increasing")
        if np.any(self.loads < 0):
            raise ValueError(f"task {self.task_id}: negative load values")
        if self.weather.shape != (self.times.size, len(WEATHER_COLS)):
            raise DimensionMismatch(
                f"task {self.task_id}: weather must be {self.times.size}x{len(WEATHER_COLS)}"
            )

    def __len__(self):
        return self.times.size

    def restricted(self, lo=None, hi=None) -> "TaskSeries":
        """Copy containing only months in (lo, hi], handling open ends."""
        keep = np.ones(self.times.size, dtype=bool)
        if lo is not None:
            keep &= self.times > lo
        if hi is not None:
            keep &= self.times <= hi
        return replace(
            self, times=self.times[keep], loads=self.loads[keep], weather=self.weather[keep]
        )


@dataclass(frozen=True)
class PosteriorSummary:
    """Stage-1 posterior over train months plus the forecast horizon."""

    task_id: str
    eval_times: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    train_mpe: float

    def at(self, times):
        """Posterior mean/variance rows for the given months (must be evaluated)."""
        idx = np.searchsorted(self.eval_times, times)
        if np.any(idx >= self.eval_times.size) or np.any(self.eval_times[idx] != times):
            raise KeyError(f"task {self.task_id}: months {times!r} were not evaluated")
        return self.means[idx], self.variances[idx]


@dataclass(frozen=True)
class StackingGate:
    """Admission threshold for stage-2 training membership."""

    tau: float = 1.0

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")


def mpe(actual, predicted) -> float:
    """Mean absolute percentage error with a per-term cap.

    Denominators are floored at 1e-6 of the mean absolute actual so
    near-zero months cannot blow up the average; each term is then capped
    at MPE_CAP. Dimensionless: mpe(c*a, c*p) == mpe(a, p) for c > 0.
    """
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.size == 0:
        raise EmptyInput("mpe needs at least one point")
    if a.size != p.size:
        raise DimensionMismatch(f"mpe got lengths {a.size} and {p.size}")
    eps = 1e-6 * float(np.mean(np.abs(a)))
    denom = np.maximum(np.abs(a), eps)
    diff = np.abs(a - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denom > 0.0, diff / denom, np.where(diff > 0.0, np.inf, 0.0))
    return float(np.mean(np.minimum(ratio, MPE_CAP)))


def task_seed(global_seed: int, task_id: str) -> int:
    """Stable per-task optimizer seed, independent of fitting order."""
    ss = np.random.SeedSequence([int(global_seed), zlib.crc32(task_id.encode("utf-8"))])
    return int(ss.generate_state(1)[0])


def fit_task_gp(series: TaskSeries, kernel_cfg, opt_cfg: gp.OptConfig, eval_times=None):
    """Fit the seasonal GP for one task and summarize its posterior.

    eval_times extends the summary beyond the training months (the union
    is always evaluated, so summaries cover training months by
    construction). Returns (GPModel, PosteriorSummary).
    """
    if len(series) < 3:
        raise TooFewPoints(f"task {series.task_id}: {len(series)} months, need at least 3")
    kernel = kernel_from_config(kernel_cfg)
    opt = replace(opt_cfg, seed=task_seed(opt_cfg.seed, series.task_id))
    model = gp.fit(kernel, series.times.astype(np.float64), series.loads, opt)

    grid = series.times.astype(np.float64)
    if eval_times is not None:
        grid = np.union1d(grid, np.asarray(eval_times, dtype=np.float64))
    dist = gp.predict(model, grid)

    train_idx = np.searchsorted(grid, series.times.astype(np.float64))
    summary = PosteriorSummary(
        task_id=series.task_id,
        eval_times=grid.astype(np.int64),
        means=dist.mean,
        variances=dist.variance,
        train_mpe=mpe(series.loads, dist.mean[train_idx]),
    )
    return model, summary


def fit_tasks(tasks, kernel_cfg, opt_cfg: gp.OptConfig, eval_times=None):
    """Fit every task, returning ({task_id: model}, [summaries]).

    Tasks are processed in task_id order so results do not depend on the
    incoming list order.
    """
    models = {}
    summaries = []
    for series in sorted(tasks, key=lambda s: s.task_id):
        model, summary = fit_task_gp(series, kernel_cfg, opt_cfg, eval_times)
        models[series.task_id] = model
        summaries.append(summary)
    return models, summaries


def apply_gate(summaries, gate: StackingGate):
    """Partition summaries into (passed, rejected) by train_mpe < tau.

    Ties go to rejected: the comparison is strict. Gating controls only
    stage-2 training membership; every task still gets predictions.
    """
    passed = [s for s in summaries if s.train_mpe < gate.tau]
    rejected = [s for s in summaries if not (s.train_mpe < gate.tau)]
    return passed, rejected
