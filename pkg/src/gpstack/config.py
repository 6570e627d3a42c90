"""Run configuration: one YAML/JSON file drives every command.

A config names exactly one data source (inline synthetic settings, raw
CSV paths, or a serialized panel), the split, both model stages, and a
mandatory seed; command-line flags may override a handful of fields. The
resolved form is echoed into artifacts so any output can be reproduced
from the artifact alone.
"""

from dataclasses import asdict, dataclass, fields

import yaml

from .errors import ConfigError
from .gp import OptConfig
from .stacking import LayoutConfig

METHODS = ("stacked", "task_gp", "ar")

DEFAULT_STAGE1_KERNEL = {
    "type": "seasonal",
    "tied": True,
    "variance": 1.0,
    "lengthscale": 2.0,
    "period": 12.0,
}
DEFAULT_STAGE1_OPT = {"restarts": 3, "max_iter": 100, "tol": 1e-9, "freeze_period": True}
DEFAULT_STAGE2_OPT = {"restarts": 2, "max_iter": 60, "tol": 1e-8, "freeze_period": True}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    method: str = "stacked"
    out_dir: str = "out"
    source_kind: str = "synth"  # synth | files | panel
    synth: dict = None
    files: dict = None
    panel_path: str = None
    train_end: object = None  # "YYYY-MM" or month index; None only for synth
    test_end: object = None
    tau: float = 1.0
    layout: LayoutConfig = LayoutConfig()
    stage1_kernel: dict = None
    stage1_opt: OptConfig = OptConfig(**DEFAULT_STAGE1_OPT, seed=0)
    stage2_kernel: dict = None
    stage2_opt: OptConfig = OptConfig(**DEFAULT_STAGE2_OPT, seed=0)
    ar_order: int = 12
    ar_difference: bool = False
    include_noise: bool = True

    def to_dict(self) -> dict:
        doc = {
            "seed": self.seed,
            "method": self.method,
            "out_dir": self.out_dir,
            "data": {},
            "tau": self.tau,
            "layout": asdict(self.layout),
            "stage1": {"kernel": self.stage1_kernel, "opt": _opt_dict(self.stage1_opt)},
            "stage2": {"kernel": self.stage2_kernel, "opt": _opt_dict(self.stage2_opt)},
            "ar": {"order": self.ar_order, "difference": self.ar_difference},
            "predict": {"include_noise": self.include_noise},
        }
        if self.source_kind == "synth":
            doc["data"]["synth"] = self.synth
        elif self.source_kind == "files":
            doc["data"]["files"] = self.files
        else:
            doc["data"]["panel"] = self.panel_path
        if self.train_end is not None:
            doc["split"] = {"train_end": self.train_end, "test_end": self.test_end}
        doc["layout"]["categorical"] = list(self.layout.categorical)
        doc["layout"]["numeric"] = list(self.layout.numeric)
        return doc


def _opt_dict(opt: OptConfig) -> dict:
    d = asdict(opt)
    d.pop("seed")  # derived from the global seed, not configured here
    return d


def _build(cls, section, defaults, what, drop=()):
    section = section or {}
    for key in drop:
        if key in section:
            raise ConfigError(f"{what}: {key!r} is set globally, not here")
    merged = {**defaults, **section}
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(merged) - allowed)
    if unknown:
        raise ConfigError(f"{what}: unknown keys {unknown}")
    try:
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def parse_config(doc: dict, overrides=None) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    doc = dict(doc)
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value

    if "seed" not in doc:
        raise ConfigError("config must name a seed; reproducibility is not optional")
    try:
        seed = int(doc["seed"])
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {doc['seed']!r}")

    method = doc.get("method", "stacked")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")

    data = doc.get("data") or {}
    sources = [k for k in ("synth", "files", "panel") if data.get(k) is not None]
    if len(sources) != 1:
        raise ConfigError(f"config must name exactly one data source, got {sources or 'none'}")
    kind = sources[0]

    files = None
    if kind == "files":
        files = dict(data["files"])
        missing = [k for k in ("readings", "weather", "demographics") if k not in files]
        if missing:
            raise ConfigError(f"data.files: missing paths {missing}")

    split_doc = doc.get("split") or {}
    train_end = split_doc.get("train_end")
    test_end = split_doc.get("test_end")
    if kind != "synth" and (train_end is None or test_end is None):
        raise ConfigError("split.train_end and split.test_end are required for this source")

    layout_doc = dict(doc.get("layout") or {})
    for key in ("categorical", "numeric"):
        if key in layout_doc:
            layout_doc[key] = tuple(layout_doc[key])
    layout = _build(LayoutConfig, layout_doc, {}, "layout")

    try:
        tau = float(doc.get("tau", 1.0))
    except (TypeError, ValueError):
        raise ConfigError(f"tau must be a number, got {doc.get('tau')!r}")
    if tau < 0:
        raise ConfigError(f"tau must be non-negative, got {tau}")

    stage1 = doc.get("stage1") or {}
    stage2 = doc.get("stage2") or {}
    ar = doc.get("ar") or {}
    predict = doc.get("predict") or {}

    return PipelineConfig(
        seed=seed,
        method=method,
        out_dir=str(doc.get("out_dir", "out")),
        source_kind=kind,
        synth=dict(data["synth"]) if kind == "synth" else None,
        files=files,
        panel_path=str(data["panel"]) if kind == "panel" else None,
        train_end=train_end,
        test_end=test_end,
        tau=tau,
        layout=layout,
        stage1_kernel=dict(stage1.get("kernel") or DEFAULT_STAGE1_KERNEL),
        stage1_opt=_build(
            OptConfig, stage1.get("opt"), {**DEFAULT_STAGE1_OPT, "seed": 0}, "stage1.opt",
            drop=("seed",),
        ),
        stage2_kernel=dict(stage2.get("kernel") or {}),
        stage2_opt=_build(
            OptConfig, stage2.get("opt"), {**DEFAULT_STAGE2_OPT, "seed": 0}, "stage2.opt",
            drop=("seed",),
        ),
        ar_order=int(ar.get("order", 12)),
        ar_difference=bool(ar.get("difference", False)),
        include_noise=bool(predict.get("include_noise", True)),
    )


def load_config(path, overrides=None) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}")
    return parse_config(doc or {}, overrides)
