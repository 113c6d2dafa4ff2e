"""Uncentered empirical second moments of a sample."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from esterr import kernels
from esterr.errors import DimensionMismatch, InvalidSpec

# Above this many observations the accumulation is compensated.
COMPENSATED_MIN_T = 100_000
DEFAULT_RANK_TOL = 1e-10
SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10


def _values(sample) -> np.ndarray:
    return np.asarray(getattr(sample, "values", sample), dtype=np.float64)


class CovarianceMatrix:
    """Symmetric positive semidefinite ``N x N`` matrix.

    The input is symmetrized on construction. With ``validate=True`` the
    asymmetry (relative ``1e-12``) and the smallest eigenvalue
    (``>= -1e-10 * ||sigma||``) are checked.
    """

    def __init__(self, values, validate: bool = True):
        m = np.array(values, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidSpec(f"covariance must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidSpec("covariance contains non-finite entries")
        scale = np.abs(m).max(initial=0.0)
        if validate and np.abs(m - m.T).max(initial=0.0) > SYMMETRY_RTOL * max(scale, 1e-300):
            raise InvalidSpec("covariance is not symmetric")
        m = 0.5 * (m + m.T)
        if validate and m.shape[0] and np.linalg.eigvalsh(m)[0] < -PSD_RTOL * scale:
            raise InvalidSpec("covariance is not positive semidefinite")
        self.values = m

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @cached_property
    def rank(self) -> int:
        return numerical_rank(self, DEFAULT_RANK_TOL)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self):
        return f"CovarianceMatrix(n={self.n})"


def empirical_covariance(sample) -> CovarianceMatrix:
    """``sigma[i, j] = (1/T) sum_t x[i, t] x[j, t]``, without mean subtraction."""
    x = _values(sample)
    if x.ndim != 2 or x.shape[1] < 1:
        raise DimensionMismatch("sample must be a non-empty N x T array")
    if x.shape[1] >= COMPENSATED_MIN_T:
        values = kernels.gram_compensated(x)
    else:
        values = (x @ x.T) / x.shape[1]
    return CovarianceMatrix(values, validate=False)


def empirical_cross_moment(sample, target) -> np.ndarray:
    """``h[i] = (1/T) sum_t x[i, t] y[t]``."""
    x = _values(sample)
    y = np.asarray(target, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != x.shape[1]:
        raise DimensionMismatch(f"target length {y.shape} does not match T = {x.shape[1]}")
    if x.shape[1] >= COMPENSATED_MIN_T:
        return kernels.gram_compensated(x, y[None, :])[:, 0]
    return (x @ y) / x.shape[1]


def numerical_rank(cov, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of eigenvalues above ``tol`` times the largest eigenvalue."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    m = np.asarray(cov.values if isinstance(cov, CovarianceMatrix) else cov, dtype=np.float64)
    if m.size == 0:
        return 0
    ev = np.linalg.eigvalsh(m)
    top = ev[-1]
    if top <= 0:
        return 0
    return int(np.sum(ev > tol * top))
