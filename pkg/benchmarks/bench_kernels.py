"""Compare the compiled and pure-Python kernel backends.

Usage: ``python benchmarks/bench_kernels.py [--repeat K] [--quick]``
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from esterr import _pykernels

try:
    from esterr import _ckernels
except ImportError:
    _ckernels = None


def _cases(quick: bool):
    rng = np.random.default_rng(0)
    n = 20 if quick else 100
    x = rng.standard_normal((n, n // 2))
    sigma = x @ x.T / x.shape[1]
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = 2 * (sigma + np.eye(n))
    kkt[:n, n] = kkt[n, :n] = 1.0
    h = np.zeros(n)
    a = np.ones((1, n))
    b = np.ones(1)
    w0 = np.zeros(n)
    w0[np.argmin(np.diag(sigma))] = 1.0
    z = rng.standard_normal((10, 2000 if quick else 20000))
    g = rng.standard_normal((10, 20000 if quick else 200000))

    def active_set(mod):
        w = w0.copy()
        working = np.ones(n, dtype=np.int8)
        working[np.argmin(np.diag(sigma))] = 0
        return mod.nonneg_active_set(2 * sigma, h, a, b, w, working, 10 * n, 1e-12, 1e-12, 1e-11)

    omega = np.full(10, 0.05)
    arch = np.full(10, 0.05)
    garch = np.full(10, 0.9)
    return {
        f"lu_factor ({n + 1}x{n + 1} KKT)": lambda m: m.lu_factor(kkt, 1e-12),
        f"nonneg_active_set (N={n}, T={n // 2})": active_set,
        f"garch_ccc ({z.shape[1]} steps x 10)": lambda m: m.garch_ccc(z, omega, arch, garch),
        f"gram_compensated (10 x {g.shape[1]})": lambda m: m.gram_compensated(g),
        "derive_seeds (10000)": lambda m: m.derive_seeds(7, 0, 10000),
    }


def run(repeat: int = 5, quick: bool = False):
    """Return ``(case, python_seconds, cython_seconds or None)`` rows (best of ``repeat``)."""
    rows = []
    for name, fn in _cases(quick).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=repeat))
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=repeat)) if _ckernels else None
        rows.append((name, t_py, t_c))
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--quick", action="store_true", help="small problem sizes")
    args = parser.parse_args(argv)
    rows = run(args.repeat, args.quick)
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'python [ms]':>12}  {'cython [ms]':>12}  {'speedup':>8}")
    for name, t_py, t_c in rows:
        c = f"{1e3 * t_c:12.3f}" if t_c is not None else f"{'n/a':>12}"
        s = f"{t_py / t_c:7.1f}x" if t_c else f"{'n/a':>8}"
        print(f"{name:<{width}}  {1e3 * t_py:12.3f}  {c}  {s}")


if __name__ == "__main__":
    main()
