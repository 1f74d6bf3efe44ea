"""Monte Carlo summary types and weighted log-log fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    n_samples: int

    def agrees_with(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr


def mean_estimate(values: np.ndarray) -> Estimate:
    """Sample mean with stderr = sample std / sqrt(n)."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n < 1:
        raise ValueError("need at least one sample")
    m = float(values.mean())
    s = float(values.std(ddof=1)) if n > 1 else 0.0
    return Estimate(m, s / math.sqrt(n), n)


def binomial_estimate(successes: float, n: int) -> Estimate:
    """Proportion estimate with the binomial standard error."""
    if n < 1:
        raise ValueError("need at least one sample")
    m = successes / n
    return Estimate(m, math.sqrt(max(m * (1.0 - m), 0.0) / n), n)


@dataclass(frozen=True)
class PowerFit:
    """Weighted least squares of log y on log x."""

    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float
    points: tuple = field(repr=False, default=())


def fit_exponent(points) -> PowerFit:
    """Fit y = C * x^slope from (x, y, stderr_y) triples.

    Weighted least squares on (log x, log y) with weights 1/(stderr_y/y)^2;
    a zero stderr gets unit weight relative to the smallest positive one.
    Needs at least 3 points, all positive.
    """
    pts = [(float(x), float(y), float(s)) for x, y, s in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points, got {len(pts)}")
    if any(x <= 0 or y <= 0 or s < 0 for x, y, s in pts):
        raise ValueError("all x, y must be positive and stderr non-negative")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    rel = np.array([s / y for _, y, s in pts])
    if np.all(rel == 0):
        w = np.ones_like(rel)
    else:
        floor = rel[rel > 0].min()
        w = 1.0 / np.maximum(rel, floor) ** 2

    sw = w.sum()
    mx = (w * lx).sum() / sw
    my = (w * ly).sum() / sw
    sxx = (w * (lx - mx) ** 2).sum()
    if sxx == 0:
        raise ValueError("x values are all equal")
    sxy = (w * (lx - mx) * (ly - my)).sum()
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    dof = len(pts) - 2
    chi2 = (w * resid ** 2).sum()
    slope_stderr = math.sqrt(max(chi2 / dof, 0.0) / sxx) if dof > 0 else 0.0
    syy = (w * (ly - my) ** 2).sum()
    r2 = 1.0 - chi2 / syy if syy > 0 else 1.0
    return PowerFit(float(slope), float(intercept), float(slope_stderr),
                    float(r2), points=tuple((lxi, lyi, wi) for lxi, lyi, wi
                                            in zip(lx, ly, w)))
