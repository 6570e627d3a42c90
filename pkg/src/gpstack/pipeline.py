"""End-to-end runs: data source to artifact, artifact to forecast, forecast
to report.

Each step reads files produced by the previous one, so any stage can be
rerun or inspected in isolation, and reruns with the same config and seed
produce byte-identical outputs.
"""

import csv
import io
import os
from dataclasses import dataclass, replace

from . import artifacts, baselines, config, data, metrics, months, stacking, tasks
from .config import _build
from .errors import ConfigError, JoinError, NoTrainableTasks, SchemaError
from .ioutil import atomic_write_text, write_json

FORECAST_COLUMNS = ("task_id", "month", "mean", "variance", "lower95", "upper95")

# stage 1 needs three points for a meaningful seasonal fit; shorter
# histories are excluded up front and recorded in the artifact
MIN_TRAIN_MONTHS = 3


def synth_config(cfg: config.PipelineConfig) -> data.SynthConfig:
    """Synth settings with the pipeline seed filled in when unset."""
    section = dict(cfg.synth or {})
    section.setdefault("seed", cfg.seed)
    return _build(data.SynthConfig, section, {}, "data.synth")


def load_source(cfg: config.PipelineConfig) -> data.PanelDataset:
    """Materialize the configured data source, split bounds attached."""
    if cfg.source_kind == "synth":
        panel = data.generate_synthetic(synth_config(cfg))
    elif cfg.source_kind == "files":
        panel = data.ingest_csv(
            cfg.files["readings"], cfg.files["weather"], cfg.files["demographics"]
        )
    else:
        panel = data.load_panel(cfg.panel_path)
    if cfg.train_end is not None:
        bounds = (_as_month(cfg.train_end), _as_month(cfg.test_end))
        panel = replace(panel, split=bounds)
    if panel.split is None:
        raise ConfigError("no split: set split.train_end/test_end or use a source that records one")
    return panel


def _as_month(value):
    return months.parse_month(value) if isinstance(value, str) else int(value)


@dataclass(frozen=True)
class FitResult:
    """Artifact document plus the in-memory state that produced it."""

    doc: dict
    path: str
    panel: data.PanelDataset
    train_panel: data.PanelDataset
    test_panel: data.PanelDataset
    dropped: tuple
    summaries: dict
    stacked: stacking.StackedModel


def run_fit(cfg: config.PipelineConfig, write=True) -> FitResult:
    """Fit the configured method and write the model artifact.

    Tasks with under three training months are dropped before fitting and
    listed in the artifact; they get no forecasts.
    """
    panel = load_source(cfg)
    train_panel, test_panel = data.split(panel, *panel.split)

    surviving = {t.task_id for t in train_panel.tasks}
    dropped = [(t.task_id, 0) for t in panel.tasks if t.task_id not in surviving]
    kept = []
    for t in train_panel.tasks:
        if len(t) >= MIN_TRAIN_MONTHS:
            kept.append(t)
        else:
            dropped.append((t.task_id, len(t)))
    if not kept:
        raise NoTrainableTasks(f"no task has {MIN_TRAIN_MONTHS}+ training months")
    train_view = replace(train_panel, tasks=tuple(kept))

    train_end, test_end = panel.split
    horizon = list(range(train_end + 1, test_end + 1))
    summaries_map = {}
    stacked = None

    if cfg.method == "ar":
        ar_models = baselines.fit_ar_tasks(train_view, cfg.ar_order, cfg.ar_difference)
        doc = artifacts.build_artifact(cfg, panel, dropped, ar_models=ar_models)
    else:
        opt1 = replace(cfg.stage1_opt, seed=cfg.seed)
        kernel_cfg = cfg.stage1_kernel or config.DEFAULT_STAGE1_KERNEL
        models, summaries = tasks.fit_tasks(kept, kernel_cfg, opt1, eval_times=horizon)
        summaries_map = {s.task_id: s for s in summaries}
        if cfg.method == "task_gp":
            doc = artifacts.build_artifact(
                cfg, panel, dropped, stage1_models=models, summaries=summaries
            )
        else:
            gate = tasks.StackingGate(cfg.tau)
            passed, _ = tasks.apply_gate(summaries, gate)
            decisions = [(s.task_id, s.train_mpe, s.train_mpe < cfg.tau) for s in summaries]
            features = stacking.build_features(
                train_view, summaries_map, cfg.layout, [s.task_id for s in passed]
            )
            opt2 = replace(cfg.stage2_opt, seed=cfg.seed)
            stacked = stacking.fit_stacked(
                features, cfg.stage2_kernel, opt2, gate, summaries_map
            )
            doc = artifacts.build_artifact(
                cfg,
                panel,
                dropped,
                stage1_models=models,
                summaries=summaries,
                gate_decisions=decisions,
                stacked=stacked,
            )

    path = os.path.join(cfg.out_dir, "model.json")
    if write:
        artifacts.save_artifact(doc, path)
    return FitResult(
        doc=doc,
        path=path,
        panel=panel,
        train_panel=train_panel,
        test_panel=test_panel,
        dropped=tuple(sorted(dropped)),
        summaries=summaries_map,
        stacked=stacked,
    )


def forecast_csv(rows) -> str:
    """Forecast rows as CSV text, months formatted YYYY-MM.

    Floats go through repr, so parsing the file recovers them exactly.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FORECAST_COLUMNS)
    for r in rows:
        writer.writerow(
            [r.task_id, months.format_month(r.month), r.mean, r.variance, r.lower95, r.upper95]
        )
    return buf.getvalue()


def read_forecast_csv(path):
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = set(FORECAST_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(f"{path}: forecast file missing columns {sorted(missing)}")
        try:
            return [
                stacking.ForecastRow(
                    task_id=row["task_id"],
                    month=months.parse_month(row["month"]),
                    mean=float(row["mean"]),
                    variance=float(row["variance"]),
                    lower95=float(row["lower95"]),
                    upper95=float(row["upper95"]),
                )
                for row in reader
            ]
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad forecast row: {exc}") from exc


def run_forecast(artifact_path, n_months=None, out_path=None):
    """Forecast from a saved artifact; returns (loaded artifact, rows)."""
    loaded = artifacts.open_artifact(artifact_path)
    rows = artifacts.forecast_from_artifact(loaded, n_months)
    if out_path is not None:
        atomic_write_text(out_path, forecast_csv(rows))
    return loaded, rows


def run_evaluate(forecast_path, artifact_path, out_path=None):
    """Score a forecast file against the artifact's held-out months.

    Every forecast row must have an actual observation; actuals nobody
    forecast (dropped tasks, unobserved months) are simply not scored.
    """
    rows = read_forecast_csv(forecast_path)
    loaded = artifacts.open_artifact(artifact_path)

    actual_by_key = {}
    region_by_task = {}
    for t in loaded.test_panel.tasks:
        region_by_task[t.task_id] = t.region
        for m, y in zip(t.times.tolist(), t.loads.tolist()):
            actual_by_key[(t.task_id, m)] = y

    unmatched = [
        (r.task_id, months.format_month(r.month))
        for r in rows
        if (r.task_id, r.month) not in actual_by_key
    ]
    if unmatched:
        raise JoinError(
            f"{len(unmatched)} forecast rows have no actual observation, "
            f"first: {unmatched[:5]}"
        )

    report = metrics.evaluate(
        [actual_by_key[(r.task_id, r.month)] for r in rows],
        [r.mean for r in rows],
        [r.lower95 for r in rows],
        [r.upper95 for r in rows],
        regions=[region_by_task[r.task_id] for r in rows],
    )
    doc = {
        "kind": loaded.kind,
        "n_tasks": len({r.task_id for r in rows}),
        **report.to_dict(),
    }
    if out_path is not None:
        write_json(out_path, doc)
    return report, doc
