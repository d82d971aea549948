import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimojam.numerics import (
    SingularMatrixError,
    hermitian,
    left_pinv,
    max_eigenpair,
    right_pinv,
    sample_complex_gaussian,
)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


class TestSampling:
    def test_zero_variance_gives_zeros(self):
        out = sample_complex_gaussian(2, 2, 0.0, np.random.default_rng(3))
        assert out.shape == (2, 2)
        assert not np.any(out)

    def test_unit_variance_power(self):
        x = sample_complex_gaussian(2, 2 * 25_000, 1.0, np.random.default_rng(1))
        assert 0.99 <= np.mean(np.abs(x) ** 2) <= 1.01

    def test_real_part_carries_half_the_variance(self):
        x = sample_complex_gaussian(1, 100_000, 4.0, np.random.default_rng(2))
        assert np.var(x.real) == pytest.approx(2.0, rel=0.02)
        assert np.var(x.imag) == pytest.approx(2.0, rel=0.02)

    @pytest.mark.parametrize("shape", [(0, 2), (2, 0)])
    def test_rejects_empty_shapes(self, shape):
        with pytest.raises(ValueError):
            sample_complex_gaussian(*shape, 1.0, np.random.default_rng(0))

    def test_rejects_negative_variance(self):
        with pytest.raises(ValueError):
            sample_complex_gaussian(1, 1, -1.0, np.random.default_rng(0))

    def test_same_seed_same_bits(self):
        a = sample_complex_gaussian(3, 4, 1.5, np.random.default_rng(99))
        b = sample_complex_gaussian(3, 4, 1.5, np.random.default_rng(99))
        assert np.array_equal(a, b)


class TestPseudoInverses:
    def test_left_identity(self):
        assert np.allclose(left_pinv(np.eye(2)), np.eye(2))

    def test_left_column_vector(self):
        assert np.allclose(left_pinv(np.array([[2.0], [0.0]])), [[0.5, 0.0]])

    def test_left_random_residual(self):
        H = crandn(np.random.default_rng(5), 4, 2)
        assert np.linalg.norm(left_pinv(H) @ H - np.eye(2)) < 1e-10

    def test_right_identity(self):
        assert np.allclose(right_pinv(np.eye(2)), np.eye(2))

    def test_right_row_vector(self):
        assert np.allclose(right_pinv(np.array([[0.0, 3.0]])), [[0.0], [1 / 3]])

    def test_right_random_residual(self):
        X = crandn(np.random.default_rng(6), 2, 8)
        assert np.linalg.norm(X @ right_pinv(X) - np.eye(2)) < 1e-10

    def test_singular_is_an_error(self):
        H = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(SingularMatrixError):
            left_pinv(H)
        with pytest.raises(SingularMatrixError):
            right_pinv(H)

    def test_zero_matrix_is_an_error(self):
        with pytest.raises(SingularMatrixError):
            left_pinv(np.zeros((2, 2)))

    def test_wrong_orientation(self):
        with pytest.raises(ValueError):
            left_pinv(np.ones((1, 2)))
        with pytest.raises(ValueError):
            right_pinv(np.ones((2, 1)))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), extra=st.integers(0, 3))
    def test_left_inverse_property(self, seed, n, extra):
        H = crandn(np.random.default_rng(seed), n + extra, n)
        if np.linalg.cond(H) > 1e4:
            return
        assert np.linalg.norm(left_pinv(H) @ H - np.eye(n)) < 1e-10


class TestMaxEigenpair:
    def test_diagonal(self):
        lam, v = max_eigenpair(np.diag([3.0, 1.0]))
        assert lam == pytest.approx(3.0)
        assert abs(v[0, 0]) == pytest.approx(1.0)
        assert abs(v[1, 0]) == pytest.approx(0.0)

    def test_identity_any_unit_vector(self):
        lam, v = max_eigenpair(np.eye(2))
        assert lam == pytest.approx(1.0)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.allclose(np.eye(2) @ v, v)

    def test_random_2x2_against_characteristic_polynomial(self):
        C = crandn(np.random.default_rng(11), 2, 2)
        B = hermitian(C) @ C
        tr = np.trace(B).real
        det = np.linalg.det(B).real
        expected = tr / 2 + np.sqrt(tr ** 2 / 4 - det)
        lam, v = max_eigenpair(B)
        assert lam == pytest.approx(expected, rel=1e-12)
        assert np.linalg.norm(B @ v - lam * v) < 1e-8

    def test_larger_matrix(self):
        C = crandn(np.random.default_rng(12), 5, 4)
        B = hermitian(C) @ C
        lam, v = max_eigenpair(B)
        assert lam == pytest.approx(np.linalg.eigvalsh(B)[-1])
        assert np.linalg.norm(B @ v - lam * v) < 1e-8

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            max_eigenpair(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            max_eigenpair(np.ones((2, 3)))

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
    def test_bounds_and_residual(self, seed, n):
        C = crandn(np.random.default_rng(seed), n + 1, n)
        A = hermitian(C) @ C
        lam, v = max_eigenpair(A)
        w = np.linalg.eigvalsh(A)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert lam >= np.trace(A).real / n - 1e-9 >= w[0] - 2e-9
        assert np.linalg.norm(A @ v - lam * v) < 1e-8 * max(1.0, lam)
