"""Regression fits and verification reports shared by the verification modules."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    max_abs_residual: float
    j_range: tuple[float, float]
    n_points: int


def fit_line(x: Sequence[float], y: Sequence[float]) -> ExponentFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least 2 points for a line fit")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return ExponentFit(float(slope), float(intercept), float(np.max(np.abs(resid))),
                       (float(x.min()), float(x.max())), len(x))


def fit_exponent(pairs: Sequence[tuple[float, float]]) -> ExponentFit:
    """Least-squares slope of log2(value) against j; needs >= 4 positive values."""
    if len(pairs) < 4:
        raise ValueError("fit_exponent needs at least 4 points")
    j = np.array([p[0] for p in pairs], dtype=float)
    v = np.array([p[1] for p in pairs], dtype=float)
    if np.any(~(v > 0)):
        raise ValueError("fit_exponent needs strictly positive values")
    return fit_line(j, np.log2(v))


@dataclass
class NormReport:
    """Outcome of a verification: per-index rows, fits and a pass flag."""

    quantity: str
    rows: list[dict[str, Any]] = field(default_factory=list)
    fits: dict[str, ExponentFit] = field(default_factory=dict)
    passed: bool = False
    tolerances: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        fits = ", ".join(f"{k}: slope={v.slope:.4f}" for k, v in self.fits.items())
        return f"[{status}] {self.quantity}" + (f" ({fits})" if fits else "")

    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self, path) -> Path:
        path = Path(path)
        cols = ["quantity"] + self.columns() + ["pass"]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in self.rows:
                w.writerow([self.quantity] + [_fmt(row.get(c, "")) for c in cols[1:-1]] + [int(self.passed)])
        return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    return v
