"""Panel construction: CSV ingestion, quarterly disaggregation, splitting,
serialization, and a synthetic generator.

The synthetic generator stands in for proprietary billing data. Its
generating function is additive and recorded in the panel provenance:

    load = base(demographics)
         + amplitude * cos(2*pi*(month_of_year - peak_month)/12)
         + coupling * (hdd_coeff * HDD + cdd_coeff * CDD)
         + gaussian noise, clamped at zero

with a shared seasonal phase and per-task amplitude and coupling, so
cross-task structure exists for the stacked model to exploit.
"""

import csv
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from fractions import Fraction

import numpy as np

from . import ioutil, months
from .errors import (
    DimensionMismatch,
    EmptySplit,
    JoinError,
    NegativeTotal,
    OverlapError,
    SchemaError,
    UnitError,
)
from .tasks import WEATHER_COLS, TaskSeries

PANEL_SCHEMA_VERSION = 1

KNOWN_UNITS = ("MJ", "kWh")


@dataclass(frozen=True)
class PanelDataset:
    """Immutable panel of task series plus a region-month weather table.

    weather maps (region, month_index) -> (mean_temp_c, hdd, cdd); it must
    cover the forecast horizon, not just observed months. split, when set,
    is (train_end, test_end) as month indices with both ends inclusive.
    """

    tasks: tuple
    weather: dict
    unit: str = "MJ"
    frequency: str = "monthly"
    split: tuple = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [t.task_id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate task_ids in panel")
        if self.unit not in KNOWN_UNITS:
            raise UnitError(f"unknown consumption unit {self.unit!r}")

    def task_map(self):
        return {t.task_id: t for t in self.tasks}

    def weather_row(self, region, month):
        return self.weather.get((region, int(month)))


def _month_span(d1: date, d2: date):
    """Month indices touched by the inclusive date interval [d1, d2]."""
    return range(months.month_index(d1.year, d1.month), months.month_index(d2.year, d2.month) + 1)


def disaggregate_quarterly(intervals):
    """Spread billed interval totals over calendar months by day count.

    intervals: (start_date, end_date, total) with inclusive ends, e.g. a
    Jan 1 - Mar 31 quarter is 90 days. Each overlapped month receives
    total * overlap_days / interval_days as an exact Fraction, so the
    monthly amounts sum to the interval total with no rounding loss.
    Returns a sorted list of (month_index, Fraction). Months covered by no
    interval simply do not appear.
    """
    cleaned = []
    for start, end, total in intervals:
        if isinstance(start, str):
            start = months.parse_date(start)
        if isinstance(end, str):
            end = months.parse_date(end)
        if end <= start:
            raise ValueError(f"interval end {end} not after start {start}")
        if total < 0:
            raise NegativeTotal(f"interval {start}..{end} has total {total}")
        cleaned.append((start, end, Fraction(total)))
    cleaned.sort(key=lambda iv: iv[0])
    for (s1, e1, _), (s2, _, _) in zip(cleaned, cleaned[1:]):
        if s2 <= e1:
            raise OverlapError(f"interval starting {s2} overlaps one ending {e1}")

    out = {}
    for start, end, total in cleaned:
        interval_days = (end - start).days + 1
        for m in _month_span(start, end):
            y, mo = months.year_month(m)
            m_first = date(y, mo, 1)
            m_last = date(y, mo, months.days_in_month(m))
            lo = max(start, m_first)
            hi = min(end, m_last)
            overlap = (hi - lo).days + 1
            share = total * Fraction(overlap, interval_days)
            out[m] = out.get(m, Fraction(0)) + share
    return sorted(out.items())


def _require_columns(row, needed, path):
    missing = [c for c in needed if c not in row]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")


def ingest_csv(readings_path, weather_path, demographics_path) -> PanelDataset:
    """Join the three source files into a monthly PanelDataset.

    Readings are billed intervals and pass through disaggregation, so
    monthly, quarterly, and ragged billing periods all land on the same
    month grid. Observed months with no weather row get NaN weather and
    are counted in provenance; downstream feature assembly treats NaN
    weather as a missing covariate.
    """
    demos = {}
    regions = {}
    with open(demographics_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            _require_columns(row, ("task_id", "region"), demographics_path)
            tid = row["task_id"]
            regions[tid] = row["region"]
            demos[tid] = {
                k: v for k, v in row.items() if k not in ("task_id", "region") and v != ""
            }

    weather = {}
    with open(weather_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            _require_columns(row, ("region", "month") + WEATHER_COLS, weather_path)
            key = (row["region"], months.parse_month(row["month"]))
            weather[key] = tuple(float(row[c]) for c in WEATHER_COLS)

    intervals = {}
    unit = None
    with open(readings_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            _require_columns(
                row, ("task_id", "period_start", "period_end", "consumption", "unit"), readings_path
            )
            tid = row["task_id"]
            if tid not in demos:
                raise JoinError(f"reading for task {tid!r} has no demographics row")
            if row["unit"] not in KNOWN_UNITS:
                raise UnitError(f"unknown consumption unit {row['unit']!r} for task {tid!r}")
            if unit is None:
                unit = row["unit"]
            elif unit != row["unit"]:
                raise UnitError(f"mixed units {unit!r} and {row['unit']!r}")
            intervals.setdefault(tid, []).append(
                (row["period_start"], row["period_end"], float(row["consumption"]))
            )
    if unit is None:
        raise SchemaError(f"{readings_path}: no readings")

    tasks = []
    missing_weather = 0
    nan_row = (float("nan"),) * len(WEATHER_COLS)
    for tid in sorted(intervals):
        monthly = disaggregate_quarterly(intervals[tid])
        times = [m for m, _ in monthly]
        loads = [float(v) for _, v in monthly]
        region = regions[tid]
        wrows = []
        for m in times:
            row = weather.get((region, m))
            if row is None:
                missing_weather += 1
                row = nan_row
            wrows.append(row)
        tasks.append(
            TaskSeries(
                task_id=tid,
                region=region,
                times=np.array(times),
                loads=np.array(loads),
                weather=np.array(wrows),
                demographics=demos[tid],
            )
        )

    return PanelDataset(
        tasks=tuple(tasks),
        weather=weather,
        unit=unit,
        provenance={
            "source": "csv",
            "readings": str(readings_path),
            "months_missing_weather": missing_weather,
        },
    )


def _as_month(value):
    return months.parse_month(value) if isinstance(value, str) else int(value)


def split(panel: PanelDataset, train_end, test_end):
    """Partition the panel into train and test views at month boundaries.

    Train keeps months <= train_end; test keeps (train_end, test_end].
    Tasks with no training months are dropped from both views (they
    cannot be modeled); callers can diff task sets to report them.
    """
    train_end = _as_month(train_end)
    test_end = _as_month(test_end)
    if train_end >= test_end:
        raise ValueError(f"train_end {train_end} must precede test_end {test_end}")

    train_tasks, test_tasks = [], []
    for t in panel.tasks:
        tr = t.restricted(hi=train_end)
        if len(tr) == 0:
            continue
        train_tasks.append(tr)
        test_tasks.append(t.restricted(lo=train_end, hi=test_end))
    if not train_tasks or sum(len(t) for t in train_tasks) == 0:
        raise EmptySplit(f"no observations at or before month {train_end}")
    if sum(len(t) for t in test_tasks) == 0:
        raise EmptySplit(f"no observations in months {train_end + 1}..{test_end}")

    bounds = (train_end, test_end)
    train = PanelDataset(
        tuple(train_tasks), panel.weather, panel.unit, panel.frequency, bounds, panel.provenance
    )
    test = PanelDataset(
        tuple(test_tasks), panel.weather, panel.unit, panel.frequency, bounds, panel.provenance
    )
    return train, test


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic panel; every draw flows from seed."""

    n_tasks: int = 200
    start: str = "2013-01"
    months: int = 36  # training window length
    test_months: int = 12
    min_history: int = 6
    max_history: int = 12
    regions: tuple = ("VIC", "NSW")
    base_load: float = 900.0
    income_effects: dict = field(
        default_factory=lambda: {"low": 0.0, "mid": 150.0, "high": 350.0}
    )
    room_effect: float = 40.0
    rooms: tuple = (2, 5)
    peak_month: float = 7.0  # July: austral winter
    rel_amp: tuple = (0.55, 0.75)
    # sharper-than-sinusoid seasonal shape: fraction of amp on a second
    # harmonic; zero keeps the plain cosine
    second_harmonic: float = 0.0
    second_peak: float = 8.0
    temp_mean: dict = field(default_factory=lambda: {"VIC": 14.0, "NSW": 17.0})
    temp_range: float = 8.0
    temp_jitter: float = 0.8
    degree_day_base: float = 18.0
    hdd_coupling: float = 0.6
    cdd_coupling: float = 0.05
    coupling_spread: float = 0.2
    noise_level: float = 0.04  # relative to each task's base load
    unit: str = "MJ"
    seed: int = 0

    def __post_init__(self):
        if self.n_tasks < 1:
            raise ValueError("n_tasks must be at least 1")
        if self.months < 6:
            raise ValueError("training window must span at least 6 months")
        if self.noise_level < 0:
            raise ValueError("noise_level must be non-negative")
        if not (1 <= self.min_history <= self.max_history <= self.months):
            raise ValueError("history bounds must satisfy 1 <= min <= max <= months")
        if self.test_months < 1:
            raise ValueError("need at least one test month")


_FORMULA = (
    "base(demographics) + amp*cos(2*pi*(moy-peak)/12) "
    "+ amp*second_harmonic*cos(4*pi*(moy-second_peak)/12) "
    "+ couple*(hdd_coeff*HDD + cdd_coeff*CDD) + noise, clamped at 0"
)


def generate_synthetic(cfg: SynthConfig) -> PanelDataset:
    rng = np.random.default_rng(cfg.seed)
    first = months.parse_month(cfg.start)
    train_end = first + cfg.months - 1
    test_end = train_end + cfg.test_months
    # weather runs a year past the split so a saved model can forecast
    # beyond the window it was evaluated on
    all_months = np.arange(first, test_end + 13)

    weather = {}
    for region in cfg.regions:
        mean = cfg.temp_mean.get(region, 15.0)
        for m in all_months:
            moy = months.month_of_year(int(m))
            temp = mean - cfg.temp_range * np.cos(2 * np.pi * (moy - 7.0) / 12.0)
            temp += rng.normal(0.0, cfg.temp_jitter)
            days = months.days_in_month(int(m))
            hdd = max(0.0, cfg.degree_day_base - temp) * days
            cdd = max(0.0, temp - cfg.degree_day_base) * days
            weather[(region, int(m))] = (float(temp), float(hdd), float(cdd))

    income_bands = sorted(cfg.income_effects)
    tasks = []
    task_params = {}
    for i in range(cfg.n_tasks):
        task_id = f"T{i:04d}"
        region = cfg.regions[i % len(cfg.regions)]
        band = income_bands[int(rng.integers(len(income_bands)))]
        n_rooms = int(rng.integers(cfg.rooms[0], cfg.rooms[1] + 1))
        base = cfg.base_load + cfg.income_effects[band] + cfg.room_effect * n_rooms
        amp = base * rng.uniform(*cfg.rel_amp)
        couple = rng.uniform(1.0 - cfg.coupling_spread, 1.0 + cfg.coupling_spread)
        history = int(rng.integers(cfg.min_history, cfg.max_history + 1))

        times = np.arange(train_end - history + 1, test_end + 1)
        moy = np.array([months.month_of_year(int(m)) for m in times], dtype=np.float64)
        wx = np.array([weather[(region, int(m))] for m in times])
        loads = (
            base
            + amp * np.cos(2 * np.pi * (moy - cfg.peak_month) / 12.0)
            + amp * cfg.second_harmonic * np.cos(4 * np.pi * (moy - cfg.second_peak) / 12.0)
            + couple * (cfg.hdd_coupling * wx[:, 1] + cfg.cdd_coupling * wx[:, 2])
            + rng.normal(0.0, cfg.noise_level * base, size=times.size)
        )
        tasks.append(
            TaskSeries(
                task_id=task_id,
                region=region,
                times=times,
                loads=np.maximum(loads, 0.0),
                weather=wx,
                demographics={"income_band": band, "num_rooms": n_rooms},
            )
        )
        # recorded so a zero-noise panel can be re-derived from provenance alone
        task_params[task_id] = {"base": float(base), "amp": float(amp), "couple": float(couple)}

    return PanelDataset(
        tasks=tuple(tasks),
        weather=weather,
        unit=cfg.unit,
        split=(train_end, test_end),
        provenance={
            "source": "synthetic",
            "formula": _FORMULA,
            "config": asdict(cfg),
            "task_params": task_params,
        },
    )


def panel_doc(panel: PanelDataset) -> dict:
    """Plain-JSON form of a panel, also embedded inside model artifacts."""
    return {
        "schema_version": PANEL_SCHEMA_VERSION,
        "frequency": panel.frequency,
        "unit": panel.unit,
        "split": list(panel.split) if panel.split else None,
        "provenance": panel.provenance,
        "weather": [
            [region, m, *vals] for (region, m), vals in sorted(panel.weather.items())
        ],
        "tasks": [
            {
                "task_id": t.task_id,
                "region": t.region,
                "times": t.times.tolist(),
                "loads": t.loads.tolist(),
                "weather": t.weather.tolist(),
                "demographics": t.demographics,
            }
            for t in panel.tasks
        ],
    }


def save_panel(panel: PanelDataset, path):
    ioutil.write_json(path, panel_doc(panel))


def panel_from_doc(doc, where="panel") -> PanelDataset:
    version = doc.get("schema_version")
    if version != PANEL_SCHEMA_VERSION:
        raise SchemaError(f"{where}: unsupported panel schema {version!r}")
    try:
        tasks = tuple(
            TaskSeries(
                task_id=t["task_id"],
                region=t["region"],
                times=np.array(t["times"]),
                loads=np.array(t["loads"]),
                weather=np.array(t["weather"]).reshape(len(t["times"]), len(WEATHER_COLS)),
                demographics=t["demographics"],
            )
            for t in doc["tasks"]
        )
        weather = {(r[0], int(r[1])): tuple(r[2:]) for r in doc["weather"]}
        return PanelDataset(
            tasks=tasks,
            weather=weather,
            unit=doc["unit"],
            frequency=doc["frequency"],
            split=tuple(doc["split"]) if doc.get("split") else None,
            provenance=doc.get("provenance", {}),
        )
    except (KeyError, TypeError, ValueError, DimensionMismatch) as exc:
        raise SchemaError(f"{where}: malformed panel: {exc}") from exc


def load_panel(path) -> PanelDataset:
    return panel_from_doc(ioutil.read_json(path), where=str(path))


def describe(panel: PanelDataset) -> dict:
    """Sample counts and load means, pooled and per region.

    With a split set, train/test refer to it; otherwise everything counts
    as train.
    """
    train_end = panel.split[0] if panel.split else None

    def stats(tasks):
        tr_loads, te_loads = [], []
        for t in tasks:
            if train_end is None:
                tr_loads.append(t.loads)
            else:
                tr_loads.append(t.loads[t.times <= train_end])
                te_loads.append(t.loads[t.times > train_end])
        tr = np.concatenate(tr_loads) if tr_loads else np.array([])
        te = np.concatenate(te_loads) if te_loads else np.array([])
        out = {
            "n_tasks": len(tasks),
            "train_samples": int(tr.size),
            "test_samples": int(te.size),
            "train_load_mean": float(tr.mean()) if tr.size else None,
        }
        return out

    report = {"overall": stats(panel.tasks), "unit": panel.unit}
    for region in sorted({t.region for t in panel.tasks}):
        report[region] = stats([t for t in panel.tasks if t.region == region])
    return report
