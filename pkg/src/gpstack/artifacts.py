"""Model artifacts: everything a fit learned, in one JSON document.

An artifact embeds the full panel, the resolved config, per-task
hyperparameters, gate decisions, and (for the stacked method) the feature
layout and ensemble hyperparameters. Loading rebuilds the models from
those stored values with plain linear algebra; nothing is re-optimized,
so a reloaded artifact forecasts bit-identically to the session that
wrote it, and the horizon can be extended past the one used at fit time.
"""

from dataclasses import dataclass

import numpy as np

from . import baselines, config, data, gp, stacking, tasks
from .errors import ArtifactError, ConfigError
from .ioutil import read_json, write_json
from .kernels import kernel_from_config

ARTIFACT_SCHEMA_VERSION = 1


def _model_hypers(model: gp.GPModel) -> dict:
    return {
        "theta": model.kernel.theta().tolist(),
        "param_names": list(model.kernel.param_names()),
        "noise_variance": model.noise_variance,
        "target_mean": model.target_mean,
        "target_scale": model.target_scale,
        "degenerate": model.degenerate,
        "nlml": model.nlml_value,
    }


def _stage1_doc(models: dict, summaries) -> dict:
    by_id = {s.task_id: s for s in summaries}
    return {
        "models": [
            {"task_id": tid, "train_mpe": by_id[tid].train_mpe, **_model_hypers(m)}
            for tid, m in sorted(models.items())
        ]
    }


def _layout_doc(layout: stacking.StackedLayout) -> dict:
    return {
        "n_lags": layout.n_lags,
        "include_variance": layout.include_variance,
        "demo_columns": [list(c) for c in layout.demo_columns],
        "groups": [list(g) for g in layout.groups],
        "column_names": list(layout.column_names),
        "col_mean": list(layout.col_mean),
        "col_std": list(layout.col_std),
    }


def _layout_from_doc(doc) -> stacking.StackedLayout:
    return stacking.StackedLayout(
        n_lags=int(doc["n_lags"]),
        include_variance=bool(doc["include_variance"]),
        demo_columns=tuple((fld, cat) for fld, cat in doc["demo_columns"]),
        groups=tuple((name, int(a), int(b)) for name, a, b in doc["groups"]),
        column_names=tuple(doc["column_names"]),
        col_mean=tuple(doc["col_mean"]),
        col_std=tuple(doc["col_std"]),
    )


def build_artifact(
    cfg: config.PipelineConfig,
    panel: data.PanelDataset,
    dropped,
    stage1_models=None,
    summaries=None,
    gate_decisions=None,
    stacked: stacking.StackedModel = None,
    ar_models=None,
) -> dict:
    """Assemble the artifact document for one completed fit.

    dropped lists (task_id, n_train_months) pairs excluded before
    stage 1; gate_decisions lists (task_id, train_mpe, passed) triples.
    """
    doc = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "kind": cfg.method,
        "config": cfg.to_dict(),
        "panel": data.panel_doc(panel),
        "dropped": [
            {"task_id": tid, "n_train_months": n} for tid, n in sorted(dropped)
        ],
    }
    if stage1_models is not None:
        doc["stage1"] = _stage1_doc(stage1_models, summaries)
    if gate_decisions is not None:
        doc["gate"] = {
            "tau": cfg.tau,
            "decisions": [
                {"task_id": tid, "train_mpe": m, "passed": ok}
                for tid, m, ok in sorted(gate_decisions)
            ],
        }
    if stacked is not None:
        doc["stage2"] = {
            "layout": _layout_doc(stacked.layout),
            "passed": list(stacked.passed),
            "n_train_rows": int(stacked.model.train_inputs.shape[0]),
            **_model_hypers(stacked.model),
        }
    if ar_models is not None:
        doc["ar"] = {
            "difference": cfg.ar_difference,
            "models": [
                {
                    "task_id": tid,
                    "order": m.order,
                    "coefficients": m.coefficients.tolist(),
                    "intercept": m.intercept,
                    "residual_variance": m.residual_variance,
                }
                for tid, m in sorted(ar_models.items())
            ],
        }
    return doc


def save_artifact(doc: dict, path):
    write_json(path, doc)


def load_artifact(path) -> dict:
    try:
        doc = read_json(path)
    except (OSError, ValueError) as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ArtifactError(f"{path}: not a model artifact")
    version = doc["schema_version"]
    if version != ARTIFACT_SCHEMA_VERSION:
        raise ArtifactError(
            f"{path}: artifact schema {version!r}, this build reads {ARTIFACT_SCHEMA_VERSION}"
        )
    for key in ("kind", "config", "panel"):
        if key not in doc:
            raise ArtifactError(f"{path}: artifact is missing the {key!r} section")
    return doc


@dataclass(frozen=True)
class LoadedArtifact:
    """Rebuilt state of a fit: panel views plus whatever the method stored."""

    kind: str
    cfg: config.PipelineConfig
    panel: data.PanelDataset
    train_panel: data.PanelDataset
    test_panel: data.PanelDataset
    doc: dict

    @property
    def split(self):
        return self.train_panel.split

    def horizon_months(self, n_months=None):
        """Month indices to forecast: the stored test window by default."""
        train_end, test_end = self.split
        if n_months is None:
            n_months = test_end - train_end
        if n_months < 1:
            raise ConfigError(f"horizon must be at least 1 month, got {n_months}")
        return list(range(train_end + 1, train_end + 1 + int(n_months)))


def open_artifact(path) -> LoadedArtifact:
    doc = load_artifact(path)
    try:
        cfg = config.parse_config(doc["config"])
        panel = data.panel_from_doc(doc["panel"], where=f"{path}:panel")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"{path}: malformed artifact: {exc}") from exc
    if panel.split is None:
        raise ArtifactError(f"{path}: embedded panel has no split")
    train_panel, test_panel = data.split(panel, *panel.split)
    return LoadedArtifact(
        kind=doc["kind"],
        cfg=cfg,
        panel=panel,
        train_panel=train_panel,
        test_panel=test_panel,
        doc=doc,
    )


def _rebuild_stage1(loaded: LoadedArtifact, horizon):
    """Stage-1 models and posterior summaries from stored hyperparameters.

    Summaries are re-predicted over train months plus the requested
    horizon; only Cholesky solves run here, so the numbers match the
    fitting session exactly wherever the grids overlap.
    """
    if "stage1" not in loaded.doc:
        raise ArtifactError("artifact has no stage-1 section")
    kernel_cfg = loaded.cfg.stage1_kernel or config.DEFAULT_STAGE1_KERNEL
    task_map = loaded.train_panel.task_map()
    models, summaries = {}, {}
    for entry in loaded.doc["stage1"]["models"]:
        tid = entry["task_id"]
        series = task_map.get(tid)
        if series is None:
            raise ArtifactError(f"stage-1 model for unknown task {tid!r}")
        kernel = kernel_from_config(kernel_cfg).with_theta(np.asarray(entry["theta"]))
        model = gp.build_model(
            kernel,
            series.times.astype(np.float64),
            series.loads,
            entry["noise_variance"],
            target_mean=entry["target_mean"],
            target_scale=entry["target_scale"],
            degenerate=entry["degenerate"],
            nlml_value=entry["nlml"],
        )
        grid = np.union1d(series.times.astype(np.float64), np.asarray(horizon, dtype=np.float64))
        dist = gp.predict(model, grid)
        models[tid] = model
        summaries[tid] = tasks.PosteriorSummary(
            task_id=tid,
            eval_times=grid.astype(np.int64),
            means=dist.mean,
            variances=dist.variance,
            train_mpe=entry["train_mpe"],
        )
    return models, summaries


def forecast_from_artifact(loaded: LoadedArtifact, n_months=None):
    """Forecast rows for the artifact's method over the horizon.

    n_months counts from the end of training; omitted, the split's own
    test window is used. Stacked forecasts re-assemble feature rows under
    the stored layout, so extending the horizon only appends rows.
    """
    horizon = loaded.horizon_months(n_months)
    if loaded.kind == "ar":
        models = {
            e["task_id"]: baselines.ARModel(
                order=int(e["order"]),
                coefficients=np.asarray(e["coefficients"], dtype=np.float64),
                intercept=float(e["intercept"]),
                residual_variance=float(e["residual_variance"]),
            )
            for e in loaded.doc["ar"]["models"]
        }
        return baselines.ar_rows(
            models, loaded.train_panel, horizon,
            difference=loaded.doc["ar"]["difference"],
        )

    _, summaries = _rebuild_stage1(loaded, horizon)
    if loaded.kind == "task_gp":
        return baselines.task_gp_rows(summaries.values(), horizon)

    if loaded.kind != "stacked":
        raise ArtifactError(f"unknown artifact kind {loaded.kind!r}")
    s2 = loaded.doc["stage2"]
    layout = _layout_from_doc(s2["layout"])
    features = stacking.rebuild_features(
        loaded.train_panel, summaries, layout, s2["passed"], horizon=horizon
    )
    kernel = stacking.stacked_kernel(layout, loaded.cfg.stage2_kernel).with_theta(
        np.asarray(s2["theta"])
    )
    model = gp.build_model(
        kernel,
        features.X_train,
        features.y_train,
        s2["noise_variance"],
        target_mean=s2["target_mean"],
        target_scale=s2["target_scale"],
        degenerate=s2["degenerate"],
        nlml_value=s2["nlml"],
    )
    smodel = stacking.StackedModel(
        model=model,
        layout=layout,
        gate=tasks.StackingGate(loaded.cfg.tau),
        passed=tuple(s2["passed"]),
        summaries=summaries,
    )
    return stacking.predict_stacked(smodel, features, include_noise=loaded.cfg.include_noise)
