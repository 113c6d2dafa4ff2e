"""Estimation-error ratio q0, its analytic mean, and power-law fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from esterr.errors import (
    BudgetViolation,
    CriticalOrSupercritical,
    DegenerateDenominator,
    DimensionMismatch,
    InsufficientPoints,
)
from esterr.moments import CovarianceMatrix

BUDGET_TOL = 1e-8
Q0_FLOOR_TOL = 1e-10


def _matrix(sigma) -> np.ndarray:
    return sigma.values if isinstance(sigma, CovarianceMatrix) else np.asarray(sigma, dtype=np.float64)


def q0_variance(w1, w0, sigma0) -> float:
    """``sqrt(w1' S w1 / w0' S w0)`` under the true covariance ``S``."""
    s = _matrix(sigma0)
    w1 = np.asarray(w1, dtype=np.float64)
    w0 = np.asarray(w0, dtype=np.float64)
    if w1.shape != w0.shape or w1.shape != (s.shape[0],):
        raise DimensionMismatch("weight vectors must both have length N")
    den = float(w0 @ s @ w0)
    if not den > 0:
        raise DegenerateDenominator(f"reference risk must be positive, got {den}")
    return math.sqrt(float(w1 @ s @ w1) / den)


def q0_iid_shortcut(w1) -> float:
    """``sqrt(N * sum(w1**2))``: q0 when the true covariance is the identity."""
    w1 = np.asarray(w1, dtype=np.float64)
    if abs(w1.sum() - 1.0) > BUDGET_TOL:
        raise BudgetViolation(f"weights sum to {w1.sum()!r}, not 1")
    return math.sqrt(w1.shape[0] * float(w1 @ w1))


def q0_general(cost: Callable[[np.ndarray], float], w1, w0) -> float:
    """``sqrt(H(w1) / H(w0))`` for a cost evaluated at the true parameters."""
    den = float(cost(np.asarray(w0, dtype=np.float64)))
    if not den > 0:
        raise DegenerateDenominator(f"reference cost must be positive, got {den}")
    return math.sqrt(float(cost(np.asarray(w1, dtype=np.float64))) / den)


def quadratic_cost(sigma0, h=None) -> Callable[[np.ndarray], float]:
    s = _matrix(sigma0)
    hv = np.zeros(s.shape[0]) if h is None else np.asarray(h, dtype=np.float64)

    def cost(w):
        return float(w @ s @ w + hv @ w)

    return cost


def regression_cost(sigma0, coefficients, noise_var: float) -> Callable[[np.ndarray], float]:
    """Population residual second moment ``noise_var + (w-b)' S (w-b)``.

    This is ``E[(y - w'x)^2]`` for ``y = b'x + eps`` with ``Var(eps) = noise_var``.
    """
    s = _matrix(sigma0)
    beta = np.asarray(coefficients, dtype=np.float64)

    def cost(w):
        d = w - beta
        return float(noise_var + d @ s @ d)

    return cost


def analytic_q0(n: int, t: int) -> float:
    """Large-N mean of q0 for the unconstrained problem: ``1/sqrt(1 - N/T)``."""
    if n <= 0 or t <= 0:
        raise ValueError("N and T must be positive")
    if n >= t:
        raise CriticalOrSupercritical(f"mean estimation error diverges for N/T >= 1 (N={n}, T={t})")
    return 1.0 / math.sqrt(1.0 - n / t)


@dataclass(frozen=True)
class ExponentFit:
    exponent: float
    intercept: float
    r_squared: float


def fit_critical_exponent(points: Sequence[tuple[float, float]]) -> ExponentFit:
    """OLS slope of ``log(value)`` against ``log(1 - r)``.

    For ``value ~ C (1 - r)^nu`` the slope estimates ``nu`` and the intercept
    ``log C``.
    """
    pts = list(points)
    if len(pts) < 3:
        raise InsufficientPoints(f"need at least 3 points, got {len(pts)}")
    r = np.array([p[0] for p in pts], dtype=np.float64)
    v = np.array([p[1] for p in pts], dtype=np.float64)
    if np.any((r <= 0) | (r >= 1)):
        raise InsufficientPoints("every ratio r must lie in (0, 1)")
    if np.any(~(v > 0)):
        raise InsufficientPoints("every value must be positive")
    x = np.log1p(-r)
    y = np.log(v)
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0:
        raise InsufficientPoints("need at least two distinct ratios")
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    syy = float(((y - ym) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / syy if syy > 0 else 1.0
    return ExponentFit(slope, intercept, r2)


@dataclass(frozen=True)
class Histogram:
    """Fixed-width bins on ``[1, upper]`` plus one overflow bin ``(upper, inf)``."""

    edges: np.ndarray
    counts: np.ndarray
    overflow: int

    def rows(self) -> list[tuple[float, float, int]]:
        out = [(float(self.edges[i]), float(self.edges[i + 1]), int(c)) for i, c in enumerate(self.counts)]
        out.append((float(self.edges[-1]), math.inf, int(self.overflow)))
        return out

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + int(self.overflow)


def q0_histogram(values, upper: float | None = None) -> Histogram:
    """Histogram with ``ceil(sqrt(n))`` bins over ``[1, upper]``.

    ``upper`` defaults to the 99th percentile of ``values`` (at least
    ``1 + 1e-6``). Values below 1 (rounding) fall in the first bin, values
    above ``upper`` in the overflow bin.
    """
    v = np.asarray(values, dtype=np.float64)
    nbins = max(1, math.ceil(math.sqrt(v.shape[0]))) if v.shape[0] else 1
    if upper is None:
        upper = float(np.quantile(v, 0.99)) if v.shape[0] else 2.0
    upper = max(float(upper), 1.0 + 1e-6)
    edges = np.linspace(1.0, upper, nbins + 1)
    inside = v <= upper
    idx = np.clip(np.searchsorted(edges, v[inside], side="right") - 1, 0, nbins - 1)
    counts = np.bincount(idx, minlength=nbins)
    return Histogram(edges, counts, int((~inside).sum()))
