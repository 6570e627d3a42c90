"""Command-line driver.

Four subcommands mirror the pipeline stages: synth writes a dataset,
fit writes a model artifact, forecast writes a CSV, evaluate writes a
report. Every command is driven by the config file; a few flags override
single fields. Exit codes: 0 ok, 2 config problem, 3 data problem,
4 numerical failure.
"""

import argparse
import os
import sys

from . import config, data, pipeline
from .errors import (
    ArtifactError,
    ConfigError,
    DimensionMismatch,
    EmptyInput,
    EmptySplit,
    JoinError,
    LayoutMismatch,
    MissingCovariate,
    NegativeTotal,
    NotPositiveDefinite,
    NoTrainableTasks,
    OverlapError,
    SchemaError,
    TooFewPoints,
    UnitError,
    ZeroVariance,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_DATA_ERRORS = (
    SchemaError,
    JoinError,
    UnitError,
    EmptySplit,
    OverlapError,
    NegativeTotal,
    MissingCovariate,
    EmptyInput,
    ArtifactError,
    DimensionMismatch,
    LayoutMismatch,
    OSError,
)
_NUMERIC_ERRORS = (NotPositiveDefinite, NoTrainableTasks, TooFewPoints, ZeroVariance)


def _load_config(args) -> config.PipelineConfig:
    overrides = {
        "method": getattr(args, "method", None),
        "tau": getattr(args, "tau", None),
        "seed": getattr(args, "seed", None),
        "out_dir": getattr(args, "out", None),
    }
    return config.load_config(args.config, overrides)


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    if cfg.source_kind != "synth":
        raise ConfigError("synth command needs a data.synth section")
    panel = pipeline.load_source(cfg)
    path = os.path.join(cfg.out_dir, "panel.json")
    data.save_panel(panel, path)
    print(f"wrote {path}: {len(panel.tasks)} tasks, unit {panel.unit}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    result = pipeline.run_fit(cfg)
    n_fit = len(result.panel.tasks) - len(result.dropped)
    line = f"wrote {result.path}: method {cfg.method}, {n_fit} tasks fitted"
    if result.dropped:
        line += f", {len(result.dropped)} dropped"
    if "gate" in result.doc:
        n_passed = sum(1 for d in result.doc["gate"]["decisions"] if d["passed"])
        line += f", gate passed {n_passed}/{len(result.doc['gate']['decisions'])}"
    print(line)
    return EXIT_OK


def cmd_forecast(args) -> int:
    out_dir = args.out or os.path.dirname(os.path.abspath(args.artifact))
    path = os.path.join(out_dir, "forecast.csv")
    _, rows = pipeline.run_forecast(args.artifact, n_months=args.horizon, out_path=path)
    print(f"wrote {path}: {len(rows)} rows")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out_dir = args.out or os.path.dirname(os.path.abspath(args.forecast))
    path = os.path.join(out_dir, "report.json")
    report, _ = pipeline.run_evaluate(args.forecast, args.artifact, out_path=path)
    print(
        f"wrote {path}: mae {report.mae:.4f}, r2 {report.r2:.4f}, "
        f"coverage95 {report.coverage95:.3f}, n {report.n}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpstack",
        description="Stacked GP forecasting for panels of short monthly series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate and save a synthetic panel")
    fit = sub.add_parser("fit", help="fit the configured method, write a model artifact")
    for p in (synth, fit):
        p.add_argument("--config", required=True, help="YAML or JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
    fit.add_argument("--method", choices=config.METHODS, default=None)
    fit.add_argument("--tau", type=float, default=None, help="override the MPE gate threshold")

    fc = sub.add_parser("forecast", help="forecast from a model artifact")
    fc.add_argument("artifact", help="model artifact written by fit")
    fc.add_argument(
        "--horizon", type=int, default=None,
        help="months past the training window (default: the fitted test window)",
    )
    fc.add_argument("--out", default=None, help="output directory (default: beside the artifact)")

    ev = sub.add_parser("evaluate", help="score a forecast against held-out months")
    ev.add_argument("forecast", help="forecast CSV written by the forecast command")
    ev.add_argument("artifact", help="model artifact holding the held-out observations")
    ev.add_argument("--out", default=None, help="output directory (default: beside the forecast)")

    synth.set_defaults(func=cmd_synth)
    fit.set_defaults(func=cmd_fit)
    fc.set_defaults(func=cmd_forecast)
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
