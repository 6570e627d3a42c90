"""Stacked Gaussian process forecasting for panels of short monthly series.

Per-series seasonal GPs summarize each household's history; an error gate
filters unreliable summaries; a second GP over lagged loads, weather,
demographics, calendar position, and the per-series posteriors forecasts
every household jointly. Exact inference throughout, with AR and
per-series-GP baselines, a synthetic panel generator, and a CLI.
"""

from . import (
    artifacts,
    baselines,
    config,
    data,
    errors,
    gp,
    kernels,
    linalg,
    metrics,
    months,
    pipeline,
    stacking,
    tasks,
)
from .backends import NAME as backend_name
from .config import PipelineConfig, load_config, parse_config
from .data import PanelDataset, SynthConfig, generate_synthetic, load_panel, save_panel
from .gp import GPModel, OptConfig, PredictiveDist, fit, nlml, nlml_grad, predict
from .kernels import (
    Constant,
    FeatureGroupKernel,
    Group,
    Kernel,
    Periodic,
    Product,
    SquaredExponential,
    Sum,
    TiedSeasonal,
    kernel_from_config,
    seasonal,
)
from .metrics import EvalReport, coverage, evaluate, mae, r2
from .stacking import (
    ForecastRow,
    LayoutConfig,
    StackedLayout,
    StackedModel,
    build_features,
    fit_stacked,
    predict_stacked,
)
from .tasks import PosteriorSummary, StackingGate, TaskSeries, apply_gate, fit_task_gp, mpe

__version__ = "0.1.0"

__all__ = [
    "Constant",
    "EvalReport",
    "FeatureGroupKernel",
    "ForecastRow",
    "GPModel",
    "Group",
    "Kernel",
    "LayoutConfig",
    "OptConfig",
    "PanelDataset",
    "Periodic",
    "PipelineConfig",
    "PosteriorSummary",
    "PredictiveDist",
    "Product",
    "SquaredExponential",
    "StackedLayout",
    "StackedModel",
    "StackingGate",
    "Sum",
    "SynthConfig",
    "TaskSeries",
    "TiedSeasonal",
    "apply_gate",
    "artifacts",
    "backend_name",
    "baselines",
    "build_features",
    "config",
    "coverage",
    "data",
    "errors",
    "evaluate",
    "fit",
    "fit_stacked",
    "fit_task_gp",
    "generate_synthetic",
    "gp",
    "kernel_from_config",
    "kernels",
    "linalg",
    "load_config",
    "load_panel",
    "mae",
    "metrics",
    "months",
    "mpe",
    "nlml",
    "nlml_grad",
    "parse_config",
    "pipeline",
    "predict",
    "predict_stacked",
    "r2",
    "save_panel",
    "seasonal",
    "stacking",
    "tasks",
]
