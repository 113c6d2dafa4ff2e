"""Quadratic programs with linear equality constraints.

The cost is ``w' sigma w + h' w`` subject to ``A w = b`` and, for
:func:`solve_nonneg_qp`, ``w >= 0``. Stationarity is written
``2 sigma w + h + A' lam - mu = 0`` with ``mu >= 0`` the multipliers of the
sign constraints.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from esterr import kernels
from esterr.errors import Infeasible, InvalidProgram, MaxIterations, SingularSystem, TooLarge
from esterr.moments import CovarianceMatrix, empirical_covariance, empirical_cross_moment

PIVOT_RTOL = 1e-12
RANK_RTOL = 1e-10
ZERO_WEIGHT_TOL = 1e-10
KKT_TOL = 1e-8
MAX_ITER_FACTOR = 10
STEP_TOL = 1e-12
MU_TOL = 1e-11
BRUTE_FORCE_MAX_N = 12


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    SINGULAR = "SingularSystem"


@dataclass(eq=False)
class QuadraticProgram:
    """``min w' sigma w + h' w  s.t.  A w = b`` with ``0 <= K < N``.

    ``offset`` is a constant that :meth:`full_cost` adds to :meth:`cost` (the
    target second moment for regression problems); solvers report ``cost``.
    ``intercept`` is carried as metadata.
    """

    sigma: CovarianceMatrix
    h: np.ndarray
    A: np.ndarray
    b: np.ndarray
    offset: float = 0.0
    intercept: float = 0.0

    def __post_init__(self):
        if not isinstance(self.sigma, CovarianceMatrix):
            self.sigma = CovarianceMatrix(self.sigma)
        n = self.sigma.n
        self.h = np.asarray(self.h, dtype=np.float64).reshape(-1)
        self.A = np.asarray(self.A, dtype=np.float64).reshape(-1, n) if np.size(self.A) else np.zeros((0, n))
        self.b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        k = self.A.shape[0]
        if self.h.shape != (n,):
            raise InvalidProgram(f"h must have length N = {n}")
        if self.A.shape != (k, n) or self.b.shape != (k,):
            raise InvalidProgram("A must be K x N and b of length K")
        if not k < n:
            raise InvalidProgram(f"need fewer constraints than variables, got K = {k}, N = {n}")
        if k:
            sv = np.linalg.svd(self.A, compute_uv=False)
            if sv[-1] <= RANK_RTOL * sv[0]:
                raise InvalidProgram("constraint matrix A must have full row rank")

    @classmethod
    def budget(cls, sigma) -> "QuadraticProgram":
        """Global minimum-variance problem: ``sum(w) = 1``, no linear cost."""
        sigma = sigma if isinstance(sigma, CovarianceMatrix) else CovarianceMatrix(sigma)
        n = sigma.n
        return cls(sigma, np.zeros(n), np.ones((1, n)), np.ones(1))

    @classmethod
    def mean_variance(cls, sigma, mu, target_return) -> "QuadraticProgram":
        """Budget plus expected-return constraint ``mu' w = target_return``."""
        sigma = sigma if isinstance(sigma, CovarianceMatrix) else CovarianceMatrix(sigma)
        mu = np.asarray(mu, dtype=np.float64)
        a = np.vstack([np.ones(sigma.n), mu])
        return cls(sigma, np.zeros(sigma.n), a, np.array([1.0, float(target_return)]))

    @property
    def n(self) -> int:
        return self.sigma.n

    @property
    def k(self) -> int:
        return self.A.shape[0]

    def cost(self, w) -> float:
        w = np.asarray(w, dtype=np.float64)
        return float(w @ self.sigma.values @ w + self.h @ w)

    def full_cost(self, w) -> float:
        return self.cost(w) + self.offset

    def kkt_matrix(self) -> np.ndarray:
        n, k = self.n, self.k
        m = np.zeros((n + k, n + k))
        m[:n, :n] = 2.0 * self.sigma.values
        m[:n, n:] = self.A.T
        m[n:, :n] = self.A
        return m


@dataclass(eq=False)
class Solution:
    w: np.ndarray | None
    multipliers: np.ndarray
    objective: float
    active_set: tuple = ()
    status: Status = Status.OPTIMAL
    bound_multipliers: np.ndarray | None = None
    iterations: int = 0
    kkt: dict = field(default_factory=dict)

    @property
    def zero_count(self) -> int:
        return len(self.active_set)

    def raise_for_status(self) -> "Solution":
        if self.status is Status.SINGULAR:
            raise SingularSystem("KKT system is numerically singular")
        return self

    def to_record(self) -> dict:
        return {
            "w": None if self.w is None else self.w.tolist(),
            "multipliers": self.multipliers.tolist(),
            "objective": None if not np.isfinite(self.objective) else self.objective,
            "active_set": list(self.active_set),
            "status": self.status.value,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Solution":
        return cls(
            w=None if rec["w"] is None else np.asarray(rec["w"], dtype=np.float64),
            multipliers=np.asarray(rec["multipliers"], dtype=np.float64),
            objective=np.nan if rec["objective"] is None else float(rec["objective"]),
            active_set=tuple(rec["active_set"]),
            status=Status(rec["status"]),
        )


def _singular(k: int) -> Solution:
    return Solution(None, np.full(k, np.nan), np.nan, (), Status.SINGULAR)


def solve_equality_qp(qp: QuadraticProgram) -> Solution:
    """Solve the KKT system ``[2 sigma, A'; A, 0] (w, lam) = (-h, b)``.

    Returns ``status = SINGULAR`` (and no weights) when a pivot of the
    partially pivoted elimination falls below ``1e-12`` times the matrix
    max-norm, which is what happens whenever the empirical covariance has
    zero modes inside the constraint null space.
    """
    n, k = qp.n, qp.k
    m = qp.kkt_matrix()
    rhs = np.concatenate([-qp.h, qp.b])
    lu, piv, ksing = kernels.lu_factor(m, PIVOT_RTOL)
    if ksing >= 0:
        return _singular(k)
    x = kernels.lu_solve(lu, piv, rhs)
    x += kernels.lu_solve(lu, piv, rhs - m @ x)
    w, lam = x[:n], x[n:]
    residual = float(np.abs(m @ x - rhs).max(initial=0.0))
    return Solution(w, lam, qp.cost(w), (), Status.OPTIMAL, kkt={"residual": residual})


def solve_min_variance(sigma) -> Solution:
    """Closed-form minimum-variance weights ``sigma^-1 1 / (1' sigma^-1 1)``.

    Uses a Cholesky solve against the all-ones vector. Raises
    :class:`SingularSystem` if ``sigma`` is not numerically positive definite.
    """
    sigma = sigma if isinstance(sigma, CovarianceMatrix) else CovarianceMatrix(sigma)
    s = sigma.values
    n = sigma.n
    try:
        factor = scipy.linalg.cho_factor(s, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("covariance matrix is not positive definite") from exc
    if np.min(np.diag(factor[0])) ** 2 <= PIVOT_RTOL * np.abs(s).max():
        raise SingularSystem("covariance matrix is numerically singular")
    u = scipy.linalg.cho_solve(factor, np.ones(n), check_finite=False)
    total = u.sum()
    if not total > 0:
        raise SingularSystem("covariance matrix is numerically singular")
    w = u / total
    return Solution(w, np.array([-2.0 / total]), float(w @ s @ w), (), Status.OPTIMAL)


def _budget_row(qp: QuadraticProgram):
    """Scale ``c`` if the only constraint is ``c * sum(w) = b``, else None."""
    if qp.k != 1:
        return None
    row = qp.A[0]
    if row[0] != 0 and np.all(row == row[0]):
        return row[0]
    return None


def _phase1(qp: QuadraticProgram):
    """Feasible starting vertex and working set for the active-set loop.

    For a lone budget constraint the start is ``(b/c) e_j`` with
    ``j = argmin sigma_jj`` (lowest index on ties). Otherwise a vertex of
    ``{A w = b, w >= 0}`` is found by the dual simplex and zero coordinates are
    released (lowest index first) until the free columns of ``A`` have rank K.
    """
    n, k = qp.n, qp.k
    c = _budget_row(qp)
    if c is not None:
        target = qp.b[0] / c
        if target < 0:
            raise Infeasible("budget constraint requires a negative total weight")
        j = int(np.argmin(np.diag(qp.sigma.values)))
        w = np.zeros(n)
        w[j] = target
        working = np.ones(n, dtype=np.int8)
        working[j] = 0
        return w, working
    res = scipy.optimize.linprog(
        np.zeros(n), A_eq=qp.A, b_eq=qp.b, bounds=[(0, None)] * n, method="highs-ds"
    )
    if res.status == 2:
        raise Infeasible("no w >= 0 satisfies A w = b")
    if res.status != 0:
        raise Infeasible(f"phase-1 linear program failed: {res.message}")
    w = np.asarray(res.x, dtype=np.float64).copy()
    w[w <= ZERO_WEIGHT_TOL] = 0.0
    working = (w == 0.0).astype(np.int8)

    def free_rank():
        cols = qp.A[:, working == 0]
        return np.linalg.matrix_rank(cols) if cols.size else 0

    rank = free_rank()
    for i in range(n):
        if rank == k:
            break
        if working[i]:
            working[i] = 0
            new_rank = free_rank()
            if new_rank > rank:
                rank = new_rank
            else:
                working[i] = 1
    return w, working


def _kkt_report(qp: QuadraticProgram, w, lam):
    g = 2.0 * qp.sigma.values @ w + qp.h
    mu = g + qp.A.T @ lam
    zero = w <= ZERO_WEIGHT_TOL
    stationarity = float(np.abs(mu[~zero]).max(initial=0.0))
    mu_bound = np.where(zero, mu, 0.0)
    return mu_bound, {
        "stationarity": stationarity,
        "complementarity": float(np.abs(w * mu_bound).max(initial=0.0)),
        "dual_feasibility": float(mu_bound.min(initial=0.0)),
        "primal": float(np.abs(qp.A @ w - qp.b).max(initial=0.0)),
        "min_weight": float(w.min(initial=0.0)),
    }


def solve_nonneg_qp(qp: QuadraticProgram, max_iter: int | None = None) -> Solution:
    """Global minimizer with the extra constraint ``w >= 0``.

    Primal active-set method started from the vertex produced by
    :func:`_phase1`. Blocking constraints enter and negative multipliers
    leave by lowest index on ties. When the working face has a singular
    reduced Hessian the step follows a zero-curvature descent direction to
    the boundary. The KKT conditions are checked at the returned point.

    Raises
    ------
    Infeasible
        If ``{A w = b, w >= 0}`` is empty.
    MaxIterations
        If the loop runs for more than ``max_iter`` (default ``10 N``) steps.
    """
    n = qp.n
    if max_iter is None:
        max_iter = MAX_ITER_FACTOR * n
    w, working = _phase1(qp)
    hess = np.ascontiguousarray(2.0 * qp.sigma.values)
    lam, iterations, status = kernels.nonneg_active_set(
        hess, qp.h, qp.A, qp.b, w, working, max_iter, PIVOT_RTOL, STEP_TOL, MU_TOL
    )
    if status == kernels.AS_MAX_ITER:
        raise MaxIterations(f"active-set loop exceeded {max_iter} iterations")
    if status != kernels.AS_OPTIMAL:
        raise InvalidProgram(f"active-set loop stopped with status {status}")
    mu, report = _kkt_report(qp, w, lam)
    failed = [
        name
        for name, bad in (
            ("stationarity", report["stationarity"] > KKT_TOL),
            ("complementarity", report["complementarity"] > KKT_TOL),
            ("dual_feasibility", report["dual_feasibility"] < -KKT_TOL),
            ("primal", report["primal"] > KKT_TOL * (1.0 + np.abs(qp.b).max(initial=0.0))),
        )
        if bad
    ]
    if failed:
        raise ArithmeticError(f"KKT verification failed ({', '.join(failed)}): {report}")
    active = tuple(int(i) for i in np.flatnonzero(w <= ZERO_WEIGHT_TOL))
    return Solution(w, lam, qp.cost(w), active, Status.OPTIMAL, mu, iterations, report)


def brute_force_oracle(qp: QuadraticProgram) -> Solution:
    """Exact solution of the sign-constrained problem by enumerating faces.

    Every subset of coordinates fixed at zero is tried; the equality
    subproblem on the complement is solved by least squares and kept when
    consistent and nonnegative. The lowest cost wins (first found on ties).
    """
    n, k = qp.n, qp.k
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"brute force is limited to N <= {BRUTE_FORCE_MAX_N}, got {n}")
    s = qp.sigma.values
    best = None
    best_cost = np.inf
    for size in range(1, n + 1):
        for free in itertools.combinations(range(n), size):
            f = list(free)
            m = np.zeros((size + k, size + k))
            m[:size, :size] = 2.0 * s[np.ix_(f, f)]
            m[:size, size:] = qp.A[:, f].T
            m[size:, :size] = qp.A[:, f]
            rhs = np.concatenate([-qp.h[f], qp.b])
            x = np.linalg.lstsq(m, rhs, rcond=None)[0]
            if np.abs(m @ x - rhs).max() > 1e-9 * (1.0 + np.abs(rhs).max()):
                continue
            if np.any(x[:size] < -1e-12):
                continue
            w = np.zeros(n)
            w[f] = np.maximum(x[:size], 0.0)
            if np.abs(qp.A @ w - qp.b).max(initial=0.0) > 1e-9 * (1.0 + np.abs(qp.b).max(initial=0.0)):
                continue
            cost = qp.cost(w)
            if cost < best_cost:
                best_cost = cost
                best = (w, x[size:])
    if best is None:
        raise Infeasible("no w >= 0 satisfies A w = b")
    w, lam = best
    mu, report = _kkt_report(qp, w, lam)
    active = tuple(int(i) for i in np.flatnonzero(w <= ZERO_WEIGHT_TOL))
    return Solution(w, lam, best_cost, active, Status.OPTIMAL, mu, 0, report)


def regression_to_qp(sample, target) -> QuadraticProgram:
    """Least squares ``y ~ w' x`` (no intercept) as an unconstrained QP.

    ``sigma`` is the empirical covariance of the regressors and
    ``h = -2 * (1/T) X y``; ``offset`` is ``(1/T) sum y^2`` so that the cost
    plus offset is the residual second moment.
    """
    sigma = empirical_covariance(sample)
    h = -2.0 * empirical_cross_moment(sample, target)
    y = np.asarray(target, dtype=np.float64)
    n = sigma.n
    return QuadraticProgram(
        sigma, h, np.zeros((0, n)), np.zeros(0), offset=float(y @ y / y.shape[0]), intercept=0.0
    )
