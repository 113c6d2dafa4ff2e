"""Backend selection for the hot kernels.

The compiled extension ``esterr._ckernels`` is used when it imports; the
numpy implementation in ``esterr._pykernels`` is the fallback. Set
``ESTERR_PURE_PYTHON=1`` to force the fallback.

Seed derivation
---------------
Per-sample seeds are ``mix(mix(mix(master) ^ point_index) ^ sample_index)``
where ``mix`` is the SplitMix64 output function (golden gamma
``0x9E3779B97F4A7C15``, multipliers ``0xBF58476D1CE4E5B9`` and
``0x94D049BB133111EB``, shifts 30/27/31), all arithmetic modulo 2**64.
"""
import os

import numpy as np

from esterr import _pykernels

if os.environ.get("ESTERR_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from esterr import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

AS_OPTIMAL = _pykernels.AS_OPTIMAL
AS_MAX_ITER = _pykernels.AS_MAX_ITER
AS_UNBOUNDED = _pykernels.AS_UNBOUNDED
AS_RANK_DEFICIENT = _pykernels.AS_RANK_DEFICIENT

MASK64 = _pykernels.MASK64


def _u64(value, name):
    value = int(value)
    if not 0 <= value <= MASK64:
        raise ValueError(f"{name} must be in [0, 2**64), got {value}")
    return value


def splitmix64(x):
    return int(_impl.splitmix64(_u64(x, "x")))


def derive_seed(master, point, sample):
    """Seed of sample ``sample`` at grid point ``point`` under ``master``."""
    return int(_impl.derive_seed(_u64(master, "master"), _u64(point, "point"), _u64(sample, "sample")))


def derive_seeds(master, point, n):
    return _impl.derive_seeds(_u64(master, "master"), _u64(point, "point"), int(n))


def lu_factor(matrix, rel_tol):
    return _impl.lu_factor(matrix, float(rel_tol))


def lu_solve(lu, piv, rhs):
    return _impl.lu_solve(lu, piv, rhs)


def lu_null_vector(lu, k):
    return _impl.lu_null_vector(lu, int(k))


def nonneg_active_set(hess, h, a, b, w, working, max_iter, piv_tol, step_tol, mu_tol):
    """Run the active-set loop; ``w`` (float64) and ``working`` (int8) are updated in place."""
    if w.dtype != np.float64 or not w.flags.c_contiguous:
        raise TypeError("w must be a contiguous float64 array")
    if working.dtype != np.int8 or not working.flags.c_contiguous:
        raise TypeError("working must be a contiguous int8 array")
    return _impl.nonneg_active_set(
        hess, h, a, b, w, working, int(max_iter), float(piv_tol), float(step_tol), float(mu_tol)
    )


def garch_ccc(z, omega, arch, garch):
    return _impl.garch_ccc(z, np.asarray(omega, float), np.asarray(arch, float), np.asarray(garch, float))


def gram_compensated(x, y=None):
    return _impl.gram_compensated(x, y)
