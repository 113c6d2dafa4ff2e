"""Fast invariant suite behind ``esterr verify``.

Checks call library functions through their modules so that a broken
build (or a monkeypatched one in tests) is caught by the relevant check.
"""
from __future__ import annotations

import math

import numpy as np

from esterr import experiment, kernels, processes, qp
from esterr import metrics
from esterr import moments

# SplitMix64 outputs for state 0 and state 1234567 (published reference values).
_MIX_KNOWN = ((0, 0xE220A8397B1DCDAF), (1234567, 6457827717110365317))


def _two_loop_covariance(x):
    n, t = x.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for k in range(t):
                s += x[i, k] * x[j, k]
            out[i, j] = s / t
    return out


def check_estimator_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.standard_normal((5, 7))
        got = moments.empirical_covariance(x).values
        err = np.abs(got - _two_loop_covariance(x)).max()
        assert err <= 1e-12, f"empirical covariance differs from two-loop sum by {err:.3g}"
    got = moments.empirical_covariance(np.array([[1.0, -1.0, 0.0], [2.0, 0.0, -2.0]])).values
    assert np.allclose(got, [[2 / 3, 2 / 3], [2 / 3, 8 / 3]], rtol=0, atol=1e-12), "hand example failed"
    return "20 random 5x7 samples + hand example"


def check_q0_identities():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        w = rng.standard_normal(n)
        w /= w.sum()
        x = rng.standard_normal((n, n + 3))
        s = x @ x.T / (n + 3)
        assert metrics.q0_variance(w, w, s) == 1.0, "q0(w, w) != 1"
        a = metrics.q0_iid_shortcut(w)
        b = metrics.q0_variance(w, np.full(n, 1 / n), np.eye(n))
        assert abs(a - b) <= 1e-12 * b, "iid shortcut disagrees with q0_variance"
        w0 = np.full(n, 1 / n)
        c = metrics.q0_general(metrics.quadratic_cost(s), w, w0)
        assert abs(c - metrics.q0_variance(w, w0, s)) <= 1e-12 * c, "q0_general disagrees"
    assert abs(metrics.q0_iid_shortcut([0.7, 0.3, 0.0, 0.0]) - math.sqrt(2.32)) < 1e-12
    return "50 random instances"


def check_closed_form_vs_kkt():
    rng = np.random.default_rng(6)
    for _ in range(30):
        n = int(rng.integers(2, 12))
        x = rng.standard_normal((n, 2 * n + 2))
        s = x @ x.T / x.shape[1]
        a = qp.solve_min_variance(s)
        b = qp.solve_equality_qp(qp.QuadraticProgram.budget(s))
        assert b.status is qp.Status.OPTIMAL
        assert np.abs(a.w - b.w).max() <= 1e-10, "closed form and KKT weights differ"
        assert b.kkt["residual"] <= 1e-10, "KKT residual too large"
    return "30 random positive-definite instances"


def check_nonneg_vs_oracle():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(2, 7))
        t = int(rng.integers(1, 2 * n))
        x = rng.standard_normal((n, t))
        prob = qp.QuadraticProgram.budget(x @ x.T / t)
        a = qp.solve_nonneg_qp(prob)
        b = qp.brute_force_oracle(prob)
        assert abs(a.objective - b.objective) <= 1e-8, "active set disagrees with brute force"
    return "60 random PSD instances, N in 2..6"


def check_regression():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        x = rng.standard_normal((n, 50))
        y = rng.standard_normal(n) @ x + rng.standard_normal(50)
        sol = qp.solve_equality_qp(qp.regression_to_qp(x, y))
        ref = np.linalg.solve(x @ x.T / 50, x @ y / 50)
        assert np.abs(sol.w - ref).max() <= 1e-10, "regression QP differs from normal equations"
    return "20 random instances"


def check_singular_detection():
    for seed in range(20):
        x = processes.generate_sample(processes.ProcessSpec.iid(20), 10, seed)
        sol = qp.solve_equality_qp(qp.QuadraticProgram.budget(moments.empirical_covariance(x)))
        assert sol.status is qp.Status.SINGULAR, "T < N solve was not flagged singular"
    return "20 draws with N=20, T=10"


def check_determinism():
    for state, expected in _MIX_KNOWN:
        assert kernels.splitmix64(state) == expected, "seed mixer does not match reference values"
    assert kernels.derive_seed(1, 2, 3) == kernels.splitmix64(
        kernels.splitmix64(kernels.splitmix64(1) ^ 2) ^ 3
    ), "derive_seed does not follow the documented chain"
    assert kernels.derive_seed(7, 0, 0) == 11241344834629033336, "derive_seed known answer changed"
    spec = processes.ProcessSpec.iid(5)
    a = processes.generate_sample(spec, 10, 42).values
    b = processes.generate_sample(spec, 10, 42).values
    assert np.array_equal(a, b), "generate_sample is not deterministic"
    es = experiment.ExperimentSpec(
        process={"family": "iid_gaussian"}, mode="min_variance", grid=[(10, 30)], n_samples=2,
        master_seed=99,
    )
    s1 = experiment.run_sample(es, 0, 1)
    s2 = experiment.run_sample(es, 0, 1)
    assert s1.q0 == s2.q0 and np.array_equal(s1.weights, s2.weights), "run_sample not deterministic"
    return "mixer known answers, sample and run_sample replay"


CHECKS = (
    ("estimator_oracle", check_estimator_oracle),
    ("q0_identities", check_q0_identities),
    ("closed_form_vs_kkt", check_closed_form_vs_kkt),
    ("nonneg_vs_brute_force", check_nonneg_vs_oracle),
    ("regression_normal_equations", check_regression),
    ("singular_detection", check_singular_detection),
    ("determinism", check_determinism),
)


def run_checks():
    """Run every check; returns a list of ``(name, passed, detail)``."""
    results = []
    for name, fn in CHECKS:
        try:
            detail = fn()
            results.append((name, True, detail))
        except Exception as exc:  # a failing check must not stop the others
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results
