import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esterr.errors import Infeasible, InvalidProgram, SingularSystem, TooLarge
from esterr.moments import empirical_covariance
from esterr.processes import ProcessSpec, generate_sample
from esterr.qp import (
    QuadraticProgram,
    Solution,
    Status,
    brute_force_oracle,
    regression_to_qp,
    solve_equality_qp,
    solve_min_variance,
    solve_nonneg_qp,
)


def _random_psd(rng, n, t):
    x = rng.standard_normal((n, t))
    return x @ x.T / t


def test_equality_qp_examples():
    sol = solve_equality_qp(QuadraticProgram.budget(np.eye(4)))
    np.testing.assert_allclose(sol.w, np.full(4, 0.25), atol=1e-15)
    sol = solve_equality_qp(QuadraticProgram.budget(np.diag([1.0, 4.0])))
    np.testing.assert_allclose(sol.w, [0.8, 0.2], atol=1e-15)


def test_equality_qp_flags_zero_modes(backend):
    x = generate_sample(ProcessSpec.iid(10), 5, 11)
    sol = solve_equality_qp(QuadraticProgram.budget(empirical_covariance(x)))
    assert sol.status is Status.SINGULAR and sol.w is None
    with pytest.raises(SingularSystem):
        sol.raise_for_status()


def test_min_variance_examples():
    np.testing.assert_allclose(solve_min_variance(np.eye(7)).w, np.full(7, 1 / 7), atol=1e-15)
    np.testing.assert_allclose(solve_min_variance([[1.0, 2.0], [2.0, 5.0]]).w, [1.5, -0.5], atol=1e-14)


def test_min_variance_budget_is_exact(rng):
    for _ in range(50):
        n = int(rng.integers(2, 30))
        w = solve_min_variance(_random_psd(rng, n, 3 * n)).w
        assert abs(w.sum() - 1.0) <= 1e-12


def test_min_variance_raises_on_singular():
    with pytest.raises(SingularSystem):
        solve_min_variance(np.ones((3, 3)))


def test_closed_form_agrees_with_kkt(rng, backend):
    for _ in range(30):
        n = int(rng.integers(2, 15))
        s = _random_psd(rng, n, 2 * n + 1)
        a, b = solve_min_variance(s), solve_equality_qp(QuadraticProgram.budget(s))
        np.testing.assert_allclose(a.w, b.w, rtol=0, atol=1e-10)
        assert b.kkt["residual"] <= 1e-10
        assert a.multipliers[0] == pytest.approx(b.multipliers[0], rel=1e-8)


def test_mean_variance_constraints_hold(rng):
    for _ in range(20):
        n = int(rng.integers(3, 20))
        mu = rng.uniform(0.0, 0.1, n)
        prob = QuadraticProgram.mean_variance(_random_psd(rng, n, 3 * n), mu, 0.05)
        sol = solve_equality_qp(prob)
        assert sol.kkt["residual"] <= 1e-8
        assert prob.A @ sol.w == pytest.approx([1.0, 0.05], abs=1e-10)


def test_program_validation():
    with pytest.raises(InvalidProgram):
        QuadraticProgram(np.eye(2), np.zeros(2), np.ones((2, 2)), np.ones(2))
    with pytest.raises(InvalidProgram):
        QuadraticProgram(np.eye(3), np.zeros(3), [[1, 1, 1], [2, 2, 2]], [1, 2])
    with pytest.raises(InvalidProgram):
        QuadraticProgram(np.eye(3), np.zeros(2), np.ones((1, 3)), np.ones(1))


def test_nonneg_examples(backend):
    sol = solve_nonneg_qp(QuadraticProgram.budget([[1.0, 2.0], [2.0, 5.0]]))
    np.testing.assert_allclose(sol.w, [1.0, 0.0], atol=1e-14)
    assert sol.active_set == (1,)
    sol = solve_nonneg_qp(QuadraticProgram.budget(np.eye(5)))
    np.testing.assert_allclose(sol.w, np.full(5, 0.2), atol=1e-14)
    assert sol.active_set == ()


def test_oracle_examples():
    sol = brute_force_oracle(QuadraticProgram.budget([[1.0, 2.0], [2.0, 5.0]]))
    np.testing.assert_allclose(sol.w, [1.0, 0.0], atol=1e-14)
    assert sol.active_set == (1,)
    np.testing.assert_allclose(brute_force_oracle(QuadraticProgram.budget(np.eye(3))).w, np.full(3, 1 / 3))


def test_infeasible_program():
    prob = QuadraticProgram(np.eye(2), np.zeros(2), [[1.0, 1.0]], [-1.0])
    with pytest.raises(Infeasible):
        brute_force_oracle(prob)
    with pytest.raises(Infeasible):
        solve_nonneg_qp(prob)


def test_oracle_refuses_large_programs():
    with pytest.raises(TooLarge):
        brute_force_oracle(QuadraticProgram.budget(np.eye(13)))


@st.composite
def psd_programs(draw):
    n = draw(st.integers(2, 6))
    t = draw(st.integers(1, 2 * n))
    seed = draw(st.integers(0, 2**32 - 1))
    x = np.random.default_rng(seed).standard_normal((n, t))
    return QuadraticProgram.budget(x @ x.T / t)


@settings(max_examples=200, deadline=None)
@given(psd_programs())
def test_active_set_matches_brute_force(prob):
    a = solve_nonneg_qp(prob)
    b = brute_force_oracle(prob)
    assert abs(a.objective - b.objective) <= 1e-8
    assert np.all(a.w >= 0) and abs(a.w.sum() - 1) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(psd_programs(), st.floats(1e-3, 1e3))
def test_nonneg_scale_equivariance(prob, c):
    a = solve_nonneg_qp(prob)
    b = solve_nonneg_qp(QuadraticProgram.budget(c * prob.sigma.values))
    assert b.objective == pytest.approx(c * a.objective, rel=1e-7, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_nonneg_never_beats_unconstrained(n, seed):
    s = _random_psd(np.random.default_rng(seed), n, 2 * n + 2)
    eq = solve_equality_qp(QuadraticProgram.budget(s))
    nn = solve_nonneg_qp(QuadraticProgram.budget(s))
    assert nn.objective >= eq.objective - 1e-12 * max(1.0, abs(eq.objective))


def test_nonneg_handles_rank_deficient_sigma(backend):
    # T < N: the equality problem is singular but the bounded one is well posed
    for seed in range(10):
        x = generate_sample(ProcessSpec.iid(40), 20, seed)
        sol = solve_nonneg_qp(QuadraticProgram.budget(empirical_covariance(x)))
        assert sol.status is Status.OPTIMAL
        assert sol.kkt["stationarity"] <= 1e-8
        assert sol.zero_count > 0


def test_backends_agree_on_nonneg(rng):
    from esterr import kernels
    from tests.conftest import BACKENDS

    s = _random_psd(rng, 30, 20)
    w = []
    for impl in BACKENDS.values():
        old, kernels._impl = kernels._impl, impl
        try:
            w.append(solve_nonneg_qp(QuadraticProgram.budget(s)).w)
        finally:
            kernels._impl = old
    for other in w[1:]:
        np.testing.assert_allclose(other, w[0], atol=1e-10)


def test_solution_record_round_trip():
    sol = solve_nonneg_qp(QuadraticProgram.budget([[1.0, 2.0], [2.0, 5.0]]))
    back = Solution.from_record(json.loads(json.dumps(sol.to_record())))
    np.testing.assert_array_equal(back.w, sol.w)
    assert back.active_set == sol.active_set and back.status is sol.status
    assert back.objective == sol.objective
    singular = Solution.from_record(json.loads(json.dumps(
        solve_equality_qp(QuadraticProgram.budget(np.zeros((3, 3)))).to_record())))
    assert singular.status is Status.SINGULAR and singular.w is None


def test_regression_noise_free_line():
    x = np.array([[1.0, -2.0, 0.5, 3.0]])
    prob = regression_to_qp(x, 2.0 * x[0])
    sol = solve_equality_qp(prob)
    np.testing.assert_allclose(sol.w, [2.0], atol=1e-14)
    assert prob.full_cost(sol.w) == pytest.approx(0.0, abs=1e-12)


def test_regression_uncorrelated_target_gives_zero():
    x = np.array([[1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0]])
    y = np.array([1.0, -1.0, -1.0, 1.0])
    np.testing.assert_allclose(solve_equality_qp(regression_to_qp(x, y)).w, [0.0, 0.0], atol=1e-15)


def test_regression_matches_normal_equations(rng):
    for _ in range(20):
        x = rng.standard_normal((3, 50))
        y = rng.standard_normal(3) @ x + rng.standard_normal(50)
        ref = np.linalg.solve(x @ x.T / 50, x @ y / 50)
        np.testing.assert_allclose(solve_equality_qp(regression_to_qp(x, y)).w, ref, rtol=0, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 6), st.integers(0, 2**32 - 1))
def test_two_constraint_nonneg_matches_brute_force(n, seed):
    # exercises the linear-programming phase 1 used for general constraints
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.0, 0.1, n)
    target = float(rng.uniform(mu.min(), mu.max()))
    prob = QuadraticProgram.mean_variance(_random_psd(rng, n, int(rng.integers(1, 2 * n))), mu, target)
    a = solve_nonneg_qp(prob)
    b = brute_force_oracle(prob)
    assert abs(a.objective - b.objective) <= 1e-8
    assert np.abs(prob.A @ a.w - prob.b).max() <= 1e-10 and np.all(a.w >= 0)


def test_general_constraints_infeasible():
    prob = QuadraticProgram.mean_variance(np.eye(3), [0.0, 0.05, 0.1], 0.2)
    with pytest.raises(Infeasible):
        solve_nonneg_qp(prob)
