from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from esterr.errors import DimensionMismatch, InvalidSpec
from esterr.moments import (
    COMPENSATED_MIN_T,
    CovarianceMatrix,
    empirical_covariance,
    empirical_cross_moment,
    numerical_rank,
)
from esterr.processes import ProcessSpec, generate_sample


def _two_loop(x, y=None):
    y = x if y is None else y
    n, t = x.shape
    m = y.shape[0]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(t):
                s += x[i, k] * y[j, k]
            out[i, j] = s / t
    return out


def test_hand_example():
    got = empirical_covariance(np.array([[1.0, -1.0, 0.0], [2.0, 0.0, -2.0]])).values
    np.testing.assert_allclose(got, [[2 / 3, 2 / 3], [2 / 3, 8 / 3]], rtol=0, atol=1e-15)


def test_zero_sample_gives_zero_matrix():
    assert not empirical_covariance(np.zeros((3, 4))).values.any()


def test_rank_bound_when_t_below_n():
    x = generate_sample(ProcessSpec.iid(10), 5, 3)
    cov = empirical_covariance(x)
    assert cov.rank <= 5
    assert numerical_rank(cov) == 5


def test_matches_two_loop_oracle(rng):
    for _ in range(20):
        x = rng.standard_normal((5, 7))
        np.testing.assert_allclose(empirical_covariance(x).values, _two_loop(x), rtol=0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 9)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_result_is_symmetric_psd_and_matches_oracle(x):
    cov = empirical_covariance(x).values
    np.testing.assert_array_equal(cov, cov.T)
    scale = max(1.0, np.abs(x).max() ** 2)
    np.testing.assert_allclose(cov, _two_loop(x), rtol=0, atol=1e-12 * scale)
    assert np.linalg.eigvalsh(cov).min() >= -1e-10 * scale


def test_compensated_path_matches_exact_sum(backend):
    # integer entries keep every product exact (below 2**53) while the sums
    # exceed 2**53, so the only error left is accumulation
    rng = np.random.default_rng(1)
    t = COMPENSATED_MIN_T
    x = rng.integers(-3, 4, size=(3, t)).astype(np.float64)
    x[0] += 3e7
    xi = [[int(v) for v in row] for row in x]
    got = empirical_covariance(x).values
    for i in range(3):
        for j in range(3):
            exact = Fraction(sum(a * b for a, b in zip(xi[i], xi[j])), t)
            assert got[i, j] == pytest.approx(float(exact), rel=1e-15, abs=1e-15)


@pytest.mark.slow
def test_consistency_at_one_million_draws():
    x = generate_sample(ProcessSpec.iid(3), 1_000_000, 77).values
    cov = empirical_covariance(x).values
    se = np.sqrt((np.einsum("it,jt->ijt", x, x) ** 2).mean(axis=2) - cov**2) / np.sqrt(x.shape[1])
    assert np.all(np.abs(cov - np.eye(3)) <= 3 * se)


def test_cross_moment_hand_example():
    h = empirical_cross_moment(np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([2.0, 2.0]))
    np.testing.assert_array_equal(h, [3.0, 1.0])


def test_cross_moment_self_consistency_and_zero_target(rng):
    x = rng.standard_normal((4, 9))
    h = empirical_cross_moment(x, x[0])
    assert h[0] == pytest.approx(empirical_covariance(x).values[0, 0], rel=1e-14)
    assert not empirical_cross_moment(x, np.zeros(9)).any()


def test_cross_moment_matches_oracle_on_compensated_path(rng):
    x = rng.standard_normal((2, COMPENSATED_MIN_T))
    y = rng.standard_normal(COMPENSATED_MIN_T)
    np.testing.assert_allclose(empirical_cross_moment(x, y), (x @ y) / x.shape[1], rtol=1e-12)


def test_cross_moment_length_mismatch():
    with pytest.raises(DimensionMismatch):
        empirical_cross_moment(np.ones((2, 3)), np.ones(4))


def test_numerical_rank_examples():
    assert numerical_rank(np.eye(4), tol=1e-8) == 4
    assert numerical_rank(np.zeros((3, 3))) == 0


def test_covariance_matrix_rejects_bad_input():
    with pytest.raises(InvalidSpec):
        CovarianceMatrix([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(InvalidSpec):
        CovarianceMatrix([[1.0, 2.0], [2.0, 1.0]])
