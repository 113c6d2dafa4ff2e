"""Synthetic multivariate return processes with exactly known second moments.

Four families are provided: iid standard normal, a one-factor Gaussian
model, multivariate Student-t, and CCC-GARCH(1,1). All are zero mean.

Random streams
--------------
``generate_sample(spec, T, seed)`` draws from
``numpy.random.Generator(PCG64(SeedSequence(seed)))``. Auxiliary streams
derived from the same seed (e.g. regression noise) use
``SeedSequence(seed, spawn_key=(k,))`` with ``k >= 1``; see :func:`stream`.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from esterr import kernels
from esterr.errors import InvalidSpec

DEFAULT_GARCH_OMEGA = 0.05
DEFAULT_GARCH_ARCH = 0.05
DEFAULT_GARCH_GARCH = 0.90
DEFAULT_BURN_IN = 1000


class Family(str, enum.Enum):
    IID_GAUSSIAN = "iid_gaussian"
    FACTOR_GAUSSIAN = "factor_gaussian"
    STUDENT_T = "student_t"
    CCC_GARCH = "ccc_garch"


def stream(seed: int, key: int = 0) -> np.random.Generator:
    """Generator for stream ``key`` of ``seed``; key 0 is the process stream."""
    if key == 0:
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(key),))
    return np.random.Generator(np.random.PCG64(ss))


def equicorrelation(n: int, rho: float) -> np.ndarray:
    """Unit-diagonal matrix with every off-diagonal entry equal to ``rho``."""
    c = np.full((n, n), float(rho))
    np.fill_diagonal(c, 1.0)
    return c


def _is_pd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    """A fully specified return process of dimension ``n``.

    Use the family constructors (:meth:`iid`, :meth:`factor`,
    :meth:`student_t`, :meth:`ccc_garch`) rather than the raw initializer.
    """

    family: Family
    n: int
    loadings: np.ndarray | None = None
    idio_var: np.ndarray | None = None
    alpha: float | None = None
    scale: np.ndarray | None = None
    omega: np.ndarray | None = None
    arch: np.ndarray | None = None
    garch: np.ndarray | None = None
    correlation: np.ndarray | None = None
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        self.validate()

    @classmethod
    def iid(cls, n: int) -> "ProcessSpec":
        return cls(Family.IID_GAUSSIAN, int(n))

    @classmethod
    def factor(cls, loadings, idio_var) -> "ProcessSpec":
        beta = np.atleast_1d(np.asarray(loadings, dtype=float))
        s2 = np.broadcast_to(np.asarray(idio_var, dtype=float), beta.shape).copy()
        return cls(Family.FACTOR_GAUSSIAN, beta.shape[0], loadings=beta, idio_var=s2)

    @classmethod
    def student_t(cls, n: int, alpha: float, scale=None) -> "ProcessSpec":
        scale = np.eye(n) if scale is None else np.asarray(scale, dtype=float)
        return cls(Family.STUDENT_T, int(n), alpha=float(alpha), scale=scale)

    @classmethod
    def ccc_garch(
        cls,
        n: int,
        omega=DEFAULT_GARCH_OMEGA,
        arch=DEFAULT_GARCH_ARCH,
        garch=DEFAULT_GARCH_GARCH,
        correlation=None,
        burn_in: int = DEFAULT_BURN_IN,
    ) -> "ProcessSpec":
        def vec(v):
            return np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()

        corr = np.eye(n) if correlation is None else np.asarray(correlation, dtype=float)
        return cls(
            Family.CCC_GARCH,
            int(n),
            omega=vec(omega),
            arch=vec(arch),
            garch=vec(garch),
            correlation=corr,
            burn_in=int(burn_in),
        )

    def validate(self) -> None:
        n = self.n
        if n < 2:
            raise InvalidSpec(f"dimension N must be >= 2, got {n}")
        fam = self.family
        if fam is Family.FACTOR_GAUSSIAN:
            if self.loadings is None or self.idio_var is None:
                raise InvalidSpec("factor_gaussian requires loadings and idio_var")
            if self.loadings.shape != (n,) or self.idio_var.shape != (n,):
                raise InvalidSpec("loadings and idio_var must have length N")
            if not np.all(self.idio_var > 0):
                raise InvalidSpec("factor_gaussian requires idio_var > 0 for every asset")
        elif fam is Family.STUDENT_T:
            if self.alpha is None or not self.alpha > 2:
                raise InvalidSpec(f"student_t requires tail index alpha > 2, got {self.alpha}")
            self._check_matrix(self.scale, "scale", unit_diagonal=False)
        elif fam is Family.CCC_GARCH:
            for name in ("omega", "arch", "garch"):
                v = getattr(self, name)
                if v is None or v.shape != (n,):
                    raise InvalidSpec(f"ccc_garch {name} must have length N")
            if not np.all(self.omega > 0):
                raise InvalidSpec("ccc_garch requires omega > 0")
            if np.any(self.arch < 0) or np.any(self.garch < 0):
                raise InvalidSpec("ccc_garch requires arch >= 0 and garch >= 0")
            persistence = self.arch + self.garch
            if np.any(persistence >= 1):
                i = int(np.argmax(persistence))
                raise InvalidSpec(
                    f"ccc_garch requires arch + garch < 1 for covariance stationarity; "
                    f"asset {i} has {persistence[i]:g}"
                )
            self._check_matrix(self.correlation, "correlation", unit_diagonal=True)
            if self.burn_in < 0:
                raise InvalidSpec("burn_in must be >= 0")

    def _check_matrix(self, m, name, unit_diagonal):
        if m is None or m.shape != (self.n, self.n):
            raise InvalidSpec(f"{name} must be an N x N matrix")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise InvalidSpec(f"{name} must be symmetric")
        if unit_diagonal and not np.allclose(np.diag(m), 1.0, rtol=0, atol=1e-12):
            raise InvalidSpec(f"{name} must have unit diagonal")
        if not _is_pd(m):
            raise InvalidSpec(f"{name} must be positive definite")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family.value, "n": self.n}
        for name in ("loadings", "idio_var", "scale", "omega", "arch", "garch", "correlation"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v.tolist()
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.family is Family.CCC_GARCH:
            out["burn_in"] = self.burn_in
        return out


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """``N x T`` block of observations ``x[i, t]`` with the seed that produced it."""

    values: np.ndarray
    seed: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise InvalidSpec("sample values must be a 2-D array")
        if not np.all(np.isfinite(v)):
            raise InvalidSpec("sample contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path) -> None:
        """Debug dump: one row per asset, full round-trip precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.values:
                writer.writerow([format(x, ".17g") for x in row])


def true_covariance(spec: ProcessSpec):
    """Population covariance of ``spec``.

    Exact for the iid, factor and Student-t families. For CCC-GARCH the
    result is ``D C D`` with ``D_ii = sqrt(omega_i / (1 - a_i - b_i))``: the
    diagonal is exact, while an off-diagonal entry equals
    ``C_ij E[sqrt(h_i h_j)]`` and so ``D C D`` bounds it from above, with
    equality when ``C_ij = 0``.
    """
    from esterr.moments import CovarianceMatrix

    spec.validate()
    fam = spec.family
    if fam is Family.IID_GAUSSIAN:
        values = np.eye(spec.n)
    elif fam is Family.FACTOR_GAUSSIAN:
        values = np.outer(spec.loadings, spec.loadings) + np.diag(spec.idio_var)
    elif fam is Family.STUDENT_T:
        values = spec.alpha / (spec.alpha - 2.0) * spec.scale
    else:
        d = np.sqrt(spec.omega / (1.0 - spec.arch - spec.garch))
        values = d[:, None] * spec.correlation * d[None, :]
    return CovarianceMatrix(values)


def generate_sample(spec: ProcessSpec, T: int, seed: int) -> SampleMatrix:
    """Draw an ``N x T`` zero-mean sample; a pure function of its arguments.

    CCC-GARCH draws ``spec.burn_in`` extra leading steps, started from the
    unconditional variance, and discards them.
    """
    spec.validate()
    T = int(T)
    if T < 1:
        raise InvalidSpec(f"T must be >= 1, got {T}")
    rng = stream(seed)
    n = spec.n
    fam = spec.family
    if fam is Family.IID_GAUSSIAN:
        x = rng.standard_normal((n, T))
    elif fam is Family.FACTOR_GAUSSIAN:
        f = rng.standard_normal(T)
        e = rng.standard_normal((n, T))
        x = np.outer(spec.loadings, f) + np.sqrt(spec.idio_var)[:, None] * e
    elif fam is Family.STUDENT_T:
        chol = np.linalg.cholesky(spec.scale)
        z = chol @ rng.standard_normal((n, T))
        chi2 = rng.chisquare(spec.alpha, T)
        x = z / np.sqrt(chi2 / spec.alpha)
    else:
        total = spec.burn_in + T
        chol = np.linalg.cholesky(spec.correlation)
        z = chol @ rng.standard_normal((n, total))
        x = kernels.garch_ccc(np.ascontiguousarray(z), spec.omega, spec.arch, spec.garch)
        x = x[:, spec.burn_in:]
    return SampleMatrix(np.ascontiguousarray(x), seed=int(seed))


@dataclass(frozen=True)
class ProcessTemplate:
    """Dimension-free process description; :meth:`build` fixes ``N``.

    Scalar parameters are broadcast to every asset. ``loadings_range`` and
    ``mu``-style ranges are expanded with ``numpy.linspace`` over the assets.
    Correlations are given as a single equicorrelation coefficient.
    """

    family: Family = Family.IID_GAUSSIAN
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(
                (k, tuple(v) if isinstance(v, list) else v) for k, v in self.params.items()
            )))

    @property
    def param_dict(self) -> dict[str, Any]:
        return dict(self.params)

    def build(self, n: int) -> ProcessSpec:
        p = self.param_dict
        fam = self.family

        def per_asset(value, name):
            arr = np.asarray(value, dtype=float)
            if arr.ndim == 0:
                return np.full(n, float(arr))
            if arr.shape != (n,):
                raise InvalidSpec(f"{name} has length {arr.shape[0]} but N = {n}")
            return arr

        if fam is Family.IID_GAUSSIAN:
            return ProcessSpec.iid(n)
        if fam is Family.FACTOR_GAUSSIAN:
            if "loadings_range" in p:
                lo, hi = p["loadings_range"]
                beta = np.linspace(lo, hi, n)
            else:
                beta = per_asset(p.get("loadings", 1.0), "loadings")
            return ProcessSpec.factor(beta, per_asset(p.get("idio_var", 1.0), "idio_var"))
        if fam is Family.STUDENT_T:
            scale = equicorrelation(n, p.get("correlation", 0.0))
            return ProcessSpec.student_t(n, p.get("alpha", 4.0), scale)
        return ProcessSpec.ccc_garch(
            n,
            omega=per_asset(p.get("omega", DEFAULT_GARCH_OMEGA), "omega"),
            arch=per_asset(p.get("a", DEFAULT_GARCH_ARCH), "a"),
            garch=per_asset(p.get("b", DEFAULT_GARCH_GARCH), "b"),
            correlation=equicorrelation(n, p.get("correlation", 0.0)),
            burn_in=p.get("burn_in", DEFAULT_BURN_IN),
        )

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family.value}
        for k, v in self.params:
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


TEMPLATE_PARAMS = {
    Family.IID_GAUSSIAN: frozenset(),
    Family.FACTOR_GAUSSIAN: frozenset({"loadings", "loadings_range", "idio_var"}),
    Family.STUDENT_T: frozenset({"alpha", "correlation"}),
    Family.CCC_GARCH: frozenset({"omega", "a", "b", "correlation", "burn_in"}),
}
