"""Monte Carlo sweeps of the estimation error over ``(N, T)`` grids.

Each sample is an independent draw with its own seed
``kernels.derive_seed(master_seed, point_index, sample_index)``, so results
do not depend on scheduling or on the number of worker processes.
Aggregation always runs in (point index, sample index) order.
"""
from __future__ import annotations

import enum
import functools
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any

import numpy as np

from esterr import kernels
from esterr.errors import Infeasible, InvalidSpec, MaxIterations
from esterr.metrics import (
    Q0_FLOOR_TOL,
    analytic_q0,
    q0_general,
    q0_histogram,
    q0_iid_shortcut,
    q0_variance,
    regression_cost,
)
from esterr.moments import empirical_covariance
from esterr.processes import Family, ProcessTemplate, generate_sample, stream, true_covariance
from esterr.qp import (
    ZERO_WEIGHT_TOL,
    QuadraticProgram,
    Status,
    regression_to_qp,
    solve_equality_qp,
    solve_min_variance,
    solve_nonneg_qp,
)

SHORTCUT_RTOL = 1e-10
FAILURE_KINDS = ("SingularSystem", "Infeasible", "MaxIterations")


class Mode(str, enum.Enum):
    MIN_VARIANCE = "min_variance"
    MIN_VARIANCE_NOSHORT = "min_variance_noshort"
    MEAN_VARIANCE = "mean_variance"
    REGRESSION = "regression"


def ratio_grid(n: int, ratios) -> tuple[tuple[int, int], ...]:
    """Grid points ``(n, round(n / r))`` for each target ratio ``r``."""
    return tuple((int(n), int(round(n / r))) for r in ratios)


def _as_tuple(v):
    if v is None or isinstance(v, (int, float)):
        return v
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a sweep.

    ``coefficients`` / ``noise_var`` apply to regression mode, ``mu`` (or
    ``mu_range``, expanded by ``linspace`` over the assets) and
    ``target_return`` to mean-variance mode. Scalars broadcast over assets.
    """

    process: ProcessTemplate
    mode: Mode
    grid: tuple
    n_samples: int = 2000
    master_seed: int = 0
    coefficients: Any = 1.0
    noise_var: float = 1.0
    mu: Any = None
    mu_range: Any = None
    target_return: float | None = None
    histogram_max: float | None = None

    def __post_init__(self):
        set_ = functools.partial(object.__setattr__, self)
        set_("mode", Mode(self.mode))
        if isinstance(self.process, dict):
            d = dict(self.process)
            set_("process", ProcessTemplate(d.pop("family"), d))
        set_("grid", tuple((int(n), int(t)) for n, t in self.grid))
        set_("coefficients", _as_tuple(self.coefficients))
        set_("mu", _as_tuple(self.mu))
        set_("mu_range", _as_tuple(self.mu_range))
        self.validate()

    def validate(self) -> None:
        if self.n_samples < 1:
            raise InvalidSpec("n_samples must be >= 1")
        if not self.grid:
            raise InvalidSpec("grid must be nonempty")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidSpec("master_seed must be a 64-bit unsigned integer")
        for n, t in self.grid:
            if n < 2 or t < 1:
                raise InvalidSpec(f"grid point ({n}, {t}) needs N >= 2 and T >= 1")
            if self.mode in (Mode.MIN_VARIANCE, Mode.MEAN_VARIANCE, Mode.REGRESSION) and not t > n:
                raise InvalidSpec(f"{self.mode.value} requires T > N, got N={n}, T={t}")
        if self.mode is Mode.MEAN_VARIANCE:
            if (self.mu is None) == (self.mu_range is None):
                raise InvalidSpec("mean_variance needs exactly one of mu or mu_range")
            if self.target_return is None:
                raise InvalidSpec("mean_variance needs target_return")
            if any(n < 3 for n, _ in self.grid):
                raise InvalidSpec("mean_variance needs N >= 3")
        if self.mode is Mode.REGRESSION and not self.noise_var > 0:
            raise InvalidSpec("regression needs noise_var > 0")

    def ratio(self, point_index: int) -> float:
        n, t = self.grid[point_index]
        return n / t

    def to_dict(self) -> dict[str, Any]:
        def plain(v):
            return list(v) if isinstance(v, tuple) else v

        return {
            "process": self.process.to_dict(),
            "mode": self.mode.value,
            "grid": [list(p) for p in self.grid],
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "coefficients": plain(self.coefficients),
            "noise_var": self.noise_var,
            "mu": plain(self.mu),
            "mu_range": plain(self.mu_range),
            "target_return": self.target_return,
            "histogram_max": self.histogram_max,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentSpec":
        return cls(**d)


@dataclass
class ErrorSample:
    point_index: int
    sample_index: int
    sample_seed: int
    q0: float
    weights: np.ndarray
    zero_count: int
    weight_std: float


@dataclass
class FailureRecord:
    point_index: int
    sample_index: int
    sample_seed: int
    kind: str
    message: str = ""


@dataclass
class SweepPoint:
    n: int
    t: int
    r: float
    n_samples: int
    q0_mean: float
    q0_std: float
    weight_std_mean: float
    zero_fraction_mean: float
    histogram: list
    failures: dict = field(default_factory=dict)
    failure_seeds: list = field(default_factory=list)

    @property
    def failure_count(self) -> int:
        return sum(self.failures.values())

    @property
    def analytic_q0(self) -> float | None:
        return analytic_q0(self.n, self.t) if self.n < self.t else None


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    points: list
    samples: list
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _PointContext:
    process: Any
    sigma0: Any
    w0: np.ndarray
    mu: np.ndarray | None
    coefficients: np.ndarray | None
    iid: bool


def _per_asset(value, n, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise InvalidSpec(f"{name} has length {arr.shape[0]} but N = {n}")
    return arr


@functools.lru_cache(maxsize=64)
def _context(spec: ExperimentSpec, point_index: int) -> _PointContext:
    n, _ = spec.grid[point_index]
    process = spec.process.build(n)
    sigma0 = true_covariance(process)
    mu = coefficients = None
    if spec.mode is Mode.MIN_VARIANCE:
        w0 = solve_min_variance(sigma0).w
    elif spec.mode is Mode.MIN_VARIANCE_NOSHORT:
        w0 = solve_nonneg_qp(QuadraticProgram.budget(sigma0)).w
    elif spec.mode is Mode.MEAN_VARIANCE:
        if spec.mu_range is not None:
            mu = np.linspace(spec.mu_range[0], spec.mu_range[1], n)
        else:
            mu = _per_asset(spec.mu, n, "mu")
        sol = solve_equality_qp(QuadraticProgram.mean_variance(sigma0, mu, spec.target_return))
        w0 = sol.raise_for_status().w
    else:
        coefficients = _per_asset(spec.coefficients, n, "coefficients")
        w0 = coefficients
    return _PointContext(process, sigma0, w0, mu, coefficients, process.family is Family.IID_GAUSSIAN)


def run_sample(spec: ExperimentSpec, point_index: int, sample_index: int):
    """One Monte Carlo draw: returns an :class:`ErrorSample` or a :class:`FailureRecord`.

    Solver failures are recorded, never raised. A q0 below one (beyond
    rounding) or a mismatch with the iid shortcut is a bug and raises.
    """
    n, t = spec.grid[point_index]
    seed = kernels.derive_seed(spec.master_seed, point_index, sample_index)
    ctx = _context(spec, point_index)

    def failure(kind, msg=""):
        return FailureRecord(point_index, sample_index, seed, kind, msg)

    sample = generate_sample(ctx.process, t, seed)
    mode = spec.mode
    if mode is Mode.REGRESSION:
        noise = stream(seed, 1).normal(0.0, math.sqrt(spec.noise_var), t)
        y = ctx.coefficients @ sample.values + noise
        sol = solve_equality_qp(regression_to_qp(sample, y))
        if sol.status is Status.SINGULAR:
            return failure("SingularSystem")
        w1 = sol.w
        q0 = q0_general(regression_cost(ctx.sigma0, ctx.coefficients, spec.noise_var), w1, ctx.w0)
    else:
        sigma1 = empirical_covariance(sample)
        if mode is Mode.MIN_VARIANCE_NOSHORT:
            try:
                sol = solve_nonneg_qp(QuadraticProgram.budget(sigma1))
            except Infeasible as exc:
                return failure("Infeasible", str(exc))
            except MaxIterations as exc:
                return failure("MaxIterations", str(exc))
        elif mode is Mode.MEAN_VARIANCE:
            sol = solve_equality_qp(QuadraticProgram.mean_variance(sigma1, ctx.mu, spec.target_return))
        else:
            sol = solve_equality_qp(QuadraticProgram.budget(sigma1))
        if sol.status is Status.SINGULAR:
            return failure("SingularSystem")
        w1 = sol.w
        q0 = q0_variance(w1, ctx.w0, ctx.sigma0)
        if ctx.iid and mode is Mode.MIN_VARIANCE:
            shortcut = q0_iid_shortcut(w1)
            if abs(shortcut - q0) > SHORTCUT_RTOL * q0:
                raise ArithmeticError(f"q0 {q0!r} disagrees with iid shortcut {shortcut!r} (seed {seed})")
    if q0 < 1.0 - Q0_FLOOR_TOL:
        raise ArithmeticError(f"q0 = {q0!r} < 1 at seed {seed}: true optimum is not optimal")
    zero_count = int(np.sum(w1 <= ZERO_WEIGHT_TOL)) if mode is Mode.MIN_VARIANCE_NOSHORT else 0
    return ErrorSample(point_index, sample_index, seed, q0, w1, zero_count, float(np.std(w1)))


def _run_chunk(spec: ExperimentSpec, point_index: int, start: int, stop: int):
    return [run_sample(spec, point_index, s) for s in range(start, stop)]


def aggregate(spec: ExperimentSpec, point_index: int, records) -> SweepPoint:
    n, t = spec.grid[point_index]
    ok = [r for r in records if isinstance(r, ErrorSample)]
    bad = [r for r in records if isinstance(r, FailureRecord)]
    failures = {k: 0 for k in FAILURE_KINDS}
    for f in bad:
        failures[f.kind] = failures.get(f.kind, 0) + 1
    q0 = np.array([s.q0 for s in ok])
    count = len(ok)
    nan = float("nan")
    hist = q0_histogram(q0, spec.histogram_max)
    return SweepPoint(
        n=n,
        t=t,
        r=n / t,
        n_samples=count,
        q0_mean=float(q0.mean()) if count else nan,
        q0_std=float(q0.std(ddof=1)) if count > 1 else (0.0 if count else nan),
        weight_std_mean=float(np.mean([s.weight_std for s in ok])) if count else nan,
        zero_fraction_mean=float(np.mean([s.zero_count / n for s in ok])) if count else nan,
        histogram=hist.rows(),
        failures=failures,
        failure_seeds=[f.sample_seed for f in bad],
    )


def run_sweep(spec: ExperimentSpec, workers: int = 1, chunk_size: int = 64) -> ExperimentResult:
    """Run every grid point and sample, then aggregate per point.

    The result is identical for any ``workers`` and ``chunk_size``.
    """
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    tasks = [
        (pi, start, min(start + chunk_size, spec.n_samples))
        for pi in range(len(spec.grid))
        for start in range(0, spec.n_samples, chunk_size)
    ]
    if workers <= 1:
        chunks = [_run_chunk(spec, *task) for task in tasks]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futures = [pool.submit(_run_chunk, spec, *task) for task in tasks]
            chunks = [f.result() for f in futures]
    per_point = [[] for _ in spec.grid]
    for (pi, _, _), chunk in zip(tasks, chunks):
        per_point[pi].extend(chunk)
    points = [aggregate(spec, pi, recs) for pi, recs in enumerate(per_point)]
    samples = [[r for r in recs if isinstance(r, ErrorSample)] for recs in per_point]
    meta = {
        "started_at": started.isoformat(),
        "elapsed_seconds": time.perf_counter() - t0,
        "workers": workers,
        "kernel_backend": kernels.BACKEND,
    }
    return ExperimentResult(spec, points, samples, meta)


def weight_dispersion_scan(spec: ExperimentSpec, workers: int = 1) -> list[tuple[float, float]]:
    """``(r, mean cross-sectional std of the sample-optimal weights)`` per point."""
    if spec.mode is not Mode.MIN_VARIANCE:
        raise InvalidSpec("weight dispersion scans use min_variance mode")
    result = run_sweep(spec, workers=workers)
    return [(p.r, p.weight_std_mean) for p in result.points]
