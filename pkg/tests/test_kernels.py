"""Compiled and pure-Python kernels agree, and both match independent references."""
import numpy as np
import pytest

from esterr import _pykernels
from tests.conftest import BACKENDS

needs_compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="extension not built")

# Vigna's published SplitMix64 stream for seed 1234567, and the first output for seed 0.
SPLITMIX_STREAM_1234567 = [6457827717110365317, 3203168211198807973, 9817491932198370423]


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_splitmix64_reference_stream(name):
    impl = BACKENDS[name]
    state = 1234567
    out = []
    for _ in range(3):
        out.append(int(impl.splitmix64(state)))
        state = (state + _pykernels.GOLDEN_GAMMA) & _pykernels.MASK64
    assert out == SPLITMIX_STREAM_1234567
    assert int(impl.splitmix64(0)) == 0xE220A8397B1DCDAF


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_derive_seeds_matches_scalar(name):
    impl = BACKENDS[name]
    batch = impl.derive_seeds(2**64 - 1, 17, 50)
    assert [int(s) for s in batch] == [int(impl.derive_seed(2**64 - 1, 17, s)) for s in range(50)]


@needs_compiled
def test_seed_derivation_backends_agree():
    c = BACKENDS["cython"]
    for master in (0, 1, 2**63, 2**64 - 1):
        for point in (0, 3):
            assert np.array_equal(c.derive_seeds(master, point, 20), _pykernels.derive_seeds(master, point, 20))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_lu_solves_random_systems(name, rng):
    impl = BACKENDS[name]
    for n in (1, 2, 7, 30):
        m = rng.standard_normal((n, n))
        b = rng.standard_normal(n)
        lu, piv, k = impl.lu_factor(m, 1e-12)
        assert k == -1
        np.testing.assert_allclose(impl.lu_solve(lu, piv, b), np.linalg.solve(m, b), rtol=1e-9, atol=1e-11)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_lu_flags_rank_deficiency_and_null_vector(name, rng):
    impl = BACKENDS[name]
    for rank, n in ((1, 3), (4, 9), (10, 21)):
        x = rng.standard_normal((n, rank))
        m = x @ x.T
        lu, piv, k = impl.lu_factor(m, 1e-12)
        assert 0 <= k <= rank
        v = impl.lu_null_vector(lu, k)
        assert np.abs(m @ v).max() <= 1e-9 * np.abs(m).max() * np.abs(v).max()


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_lu_zero_matrix_is_singular_at_first_column(name):
    _, _, k = BACKENDS[name].lu_factor(np.zeros((3, 3)), 1e-12)
    assert k == 0


@needs_compiled
def test_lu_backends_take_identical_pivots(rng):
    m = rng.standard_normal((25, 25))
    a = BACKENDS["cython"].lu_factor(m, 1e-12)
    b = _pykernels.lu_factor(m, 1e-12)
    assert np.array_equal(a[1], b[1]) and a[2] == b[2]
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12, atol=1e-13)


def _garch_reference(z, omega, a, b):
    n, total = z.shape
    x = np.empty_like(z)
    for i in range(n):
        var = omega[i] / (1 - a[i] - b[i])
        for t in range(total):
            x[i, t] = np.sqrt(var) * z[i, t]
            var = omega[i] + a[i] * x[i, t] ** 2 + b[i] * var
    return x


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_garch_recursion_matches_scalar_loop(name, rng):
    z = rng.standard_normal((3, 200))
    om, a, b = np.array([0.05, 0.1, 0.2]), np.array([0.05, 0.1, 0.0]), np.array([0.9, 0.8, 0.5])
    np.testing.assert_allclose(BACKENDS[name].garch_ccc(z, om, a, b), _garch_reference(z, om, a, b), rtol=1e-13)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_gram_compensated_accuracy(name, rng):
    from fractions import Fraction

    x = rng.standard_normal((2, 200_003)) + 1e3
    got = BACKENDS[name].gram_compensated(x)
    exact = sum(Fraction(v) * Fraction(w) for v, w in zip(x[0], x[1])) / x.shape[1]
    assert abs(got[0, 1] - float(exact)) <= 2e-16 * abs(float(exact)) * 4
    y = rng.standard_normal((1, 200_003))
    np.testing.assert_allclose(BACKENDS[name].gram_compensated(x, y), x @ y.T / x.shape[1], rtol=1e-10)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_active_set_kernel_on_tiny_problem(name):
    # sigma = [[1,2],[2,5]], budget: optimum (1, 0) after releasing nothing from the start vertex.
    hess = 2.0 * np.array([[1.0, 2.0], [2.0, 5.0]])
    w = np.array([1.0, 0.0])
    working = np.array([0, 1], dtype=np.int8)
    lam, it, status = BACKENDS[name].nonneg_active_set(
        hess, np.zeros(2), np.ones((1, 2)), np.ones(1), w, working, 20, 1e-12, 1e-12, 1e-11
    )
    assert status == _pykernels.AS_OPTIMAL
    np.testing.assert_array_equal(w, [1.0, 0.0])
    np.testing.assert_allclose(lam, [-2.0])
