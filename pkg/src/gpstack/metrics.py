"""Forecast accuracy and interval-quality measures."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyInput, ZeroVariance


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.size != p.size:
        raise DimensionMismatch(f"got lengths {a.size} and {p.size}")
    if a.size == 0:
        raise EmptyInput("need at least one point")
    return a, p


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def r2(actual, predicted) -> float:
    """Coefficient of determination: 1 at perfect, 0 for predicting the mean."""
    a, p = _pair(actual, predicted)
    ss_tot = float(np.sum((a - np.mean(a)) ** 2))
    if ss_tot == 0.0:
        raise ZeroVariance("all actual values identical, r2 undefined")
    return 1.0 - float(np.sum((a - p) ** 2)) / ss_tot


def coverage(actual, lower, upper) -> float:
    """Fraction of actuals inside their [lower, upper] interval, ends inclusive."""
    a = np.asarray(actual, dtype=np.float64).ravel()
    lo = np.asarray(lower, dtype=np.float64).ravel()
    hi = np.asarray(upper, dtype=np.float64).ravel()
    if not (a.size == lo.size == hi.size):
        raise DimensionMismatch(f"got lengths {a.size}, {lo.size}, {hi.size}")
    if a.size == 0:
        raise EmptyInput("need at least one point")
    return float(np.mean((lo <= a) & (a <= hi)))


@dataclass(frozen=True)
class EvalReport:
    """Pooled metrics plus a per-region breakdown of the same fields."""

    mae: float
    r2: float
    coverage95: float
    n: int
    regions: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"mae": self.mae, "r2": self.r2, "coverage95": self.coverage95, "n": self.n}
        out["regions"] = {k: dict(v) for k, v in sorted(self.regions.items())}
        return out


def evaluate(actual, predicted, lower, upper, regions=None) -> EvalReport:
    """Score one forecast set, optionally split by a region label per row."""
    a, p = _pair(actual, predicted)
    report = EvalReport(
        mae=mae(a, p),
        r2=r2(a, p),
        coverage95=coverage(a, lower, upper),
        n=int(a.size),
        regions={},
    )
    if regions is None:
        return report
    regions = np.asarray(regions)
    lo = np.asarray(lower, dtype=np.float64).ravel()
    hi = np.asarray(upper, dtype=np.float64).ravel()
    for name in sorted(set(regions.tolist())):
        m = regions == name
        sub = {
            "mae": mae(a[m], p[m]),
            "r2": r2(a[m], p[m]),
            "coverage95": coverage(a[m], lo[m], hi[m]),
            "n": int(m.sum()),
        }
        report.regions[name] = sub
    return report
