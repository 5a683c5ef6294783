"""Empirical distributions, Kolmogorov-Smirnov distances and moment estimates."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DataError",
    "EmpiricalSample",
    "KSReport",
    "dkw_band",
    "ecdf",
    "ks_statistic",
    "ks_against",
    "moment_report",
    "survival_gap",
    "ecdf_table",
    "write_ecdf_csv",
]


class DataError(ValueError):
    """Sample contains NaN or is empty."""


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted sample plus where it came from."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if len(v) == 0:
            raise DataError("empty sample")
        if np.isnan(v).any():
            raise DataError("sample contains NaN")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    def scaled(self, factor: float) -> "EmpiricalSample":
        prov = dict(self.provenance, scale=self.provenance.get("scale", 1.0) * factor)
        return EmpiricalSample(self.values * factor, prov)

    def ecdf(self, x):
        return ecdf(self.values, x)

    def digest(self) -> str:
        return hashlib.sha256(self.values.tobytes()).hexdigest()


def dkw_band(n: int, alpha: float = 0.05) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band, ``sqrt(ln(2/alpha)/(2n))``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def ecdf(sorted_values: np.ndarray, x):
    """Right-continuous ECDF of already sorted values."""
    v = np.asarray(sorted_values)
    out = np.searchsorted(v, x, side="right") / len(v)
    return float(out) if np.ndim(x) == 0 else out


def ks_statistic(sorted_values: np.ndarray, cdf) -> float:
    """``max_i max(i/n - F(x_i), F(x_i) - (i-1)/n)`` over the order statistics."""
    x = np.asarray(sorted_values, dtype=float)
    n = len(x)
    # discrete samples repeat values a lot; evaluate the cdf once per distinct value
    uniq, inv = np.unique(x, return_inverse=True)
    F = np.asarray(cdf(uniq), dtype=float).reshape(-1)[inv]
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n), 0.0))


@dataclass(frozen=True)
class KSReport:
    ks: float
    n: int
    alpha: float
    dkw_band: float
    passed: bool
    label: str = ""

    def as_dict(self) -> dict:
        return {"ks": self.ks, "n": self.n, "alpha": self.alpha, "dkw_band": self.dkw_band,
                "pass": self.passed, "label": self.label}


def ks_against(sample: EmpiricalSample, cdf, alpha: float = 0.05, threshold: float | None = None,
               label: str = "") -> KSReport:
    """One-sample KS distance of ``sample`` to the distribution function ``cdf``.

    ``passed`` compares against ``threshold`` when given, otherwise against the
    DKW band at level ``alpha``.
    """
    if np.isnan(sample.values).any():
        raise DataError("sample contains NaN")
    d = ks_statistic(sample.values, cdf)
    band = dkw_band(sample.n, alpha)
    limit = band if threshold is None else threshold
    return KSReport(d, sample.n, alpha, band, d < limit, label)


def moment_report(sample: EmpiricalSample, k: int = 1) -> tuple[float, float]:
    """k-th raw moment and its standard error ``sd(x^k)/sqrt(n)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    p = sample.values**k
    if sample.n < 2:
        return float(p.mean()), 0.0
    return float(p.mean()), float(p.std(ddof=1) / math.sqrt(sample.n))


def survival_gap(sample: EmpiricalSample, sf, points) -> float:
    """``max_x |P_n(X > x) - sf(x)|`` over ``points``."""
    pts = np.asarray(points, dtype=float)
    emp = 1.0 - ecdf(sample.values, pts)
    return float(np.max(np.abs(emp - np.asarray(sf(pts)))))


def ecdf_table(sample: EmpiricalSample, cdf, max_rows: int | None = 2000) -> np.ndarray:
    """Rows ``(x, ecdf(x), cdf(x))`` at the distinct sample values (thinned)."""
    x = np.unique(sample.values)
    if max_rows is not None and len(x) > max_rows:
        x = x[np.linspace(0, len(x) - 1, max_rows).round().astype(int)]
    return np.column_stack([x, ecdf(sample.values, x), np.asarray(cdf(x), dtype=float)])


def write_ecdf_csv(sample: EmpiricalSample, cdf, stream=None, max_rows: int | None = 2000) -> str:
    """CSV with header ``x,ecdf,cdf_target``; returns the text when ``stream`` is None."""
    buf = stream if stream is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "ecdf", "cdf_target"])
    for row in ecdf_table(sample, cdf, max_rows):
        w.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue() if stream is None else ""
