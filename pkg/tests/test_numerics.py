import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from bistatic_crb.errors import DomainError, SingularityError
from bistatic_crb.numerics import (bessel_j0, finite_difference_jacobian, kronecker, psd_sqrt,
                                   toeplitz_hermitian, whitener)


def random_pd(rng, n, cond=10.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + n / cond * np.eye(n)


class TestBesselJ0:
    def test_origin(self):
        assert bessel_j0(0.0) == 1.0

    def test_first_zero(self):
        # 2.404826 is the first zero to 6 digits
        assert abs(bessel_j0(2.404826)) < 1e-6

    def test_at_one(self):
        # scipy oracle: 0.7651976865579665
        assert bessel_j0(1.0) == pytest.approx(0.7651976865579665, abs=1e-9)

    def test_against_scipy_full_range(self):
        x = np.linspace(-100, 100, 4001)
        assert np.max(np.abs(bessel_j0(x) - scipy.special.j0(x))) < 1e-10

    def test_sign_alternates_across_zeros(self):
        vals = bessel_j0(np.array([2.0, 3.0, 6.0, 9.0]))
        assert vals[0] > 0 and vals[1] < 0 and vals[2] > 0 and vals[3] < 0

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            bessel_j0(np.inf)
        with pytest.raises(DomainError):
            bessel_j0(np.array([1.0, np.nan]))

    @given(st.floats(-100, 100))
    def test_even_and_bounded(self, x):
        assert bessel_j0(x) == pytest.approx(bessel_j0(-x), abs=1e-14)
        assert abs(bessel_j0(x)) <= 1.0 + 1e-12


class TestKronecker:
    def test_identity_absorbs(self):
        b = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(kronecker(np.eye(1), b), b)

    def test_blocks(self):
        x = np.array([[0, 1], [1, 0]])
        out = kronecker(np.array([[1, 2], [3, 4]]), x)
        expected = np.block([[1 * x, 2 * x], [3 * x, 4 * x]])
        assert np.array_equal(out, expected)

    def test_shape(self):
        assert kronecker(np.ones((2, 3)), np.ones((4, 5))).shape == (8, 15)

    def test_mixed_product(self, rng):
        a, c = rng.standard_normal((2, 2, 2))
        b, d = rng.standard_normal((2, 3, 3))
        lhs = kronecker(a, b) @ kronecker(c, d)
        assert np.allclose(lhs, kronecker(a @ c, b @ d), atol=1e-10)


class TestToeplitz:
    def test_scalar(self):
        assert np.array_equal(toeplitz_hermitian([1.0]), [[1.0]])

    def test_two(self):
        assert np.array_equal(toeplitz_hermitian([1.0, 0.5]), [[1, 0.5], [0.5, 1]])

    def test_three_diagonals(self):
        t = toeplitz_hermitian([1.0, 0.9, 0.5])
        assert np.array_equal(t, [[1, 0.9, 0.5], [0.9, 1, 0.9], [0.5, 0.9, 1]])

    def test_complex_is_hermitian(self):
        t = toeplitz_hermitian(np.array([2.0, 1j, 0.5 - 0.5j]))
        assert np.allclose(t, t.conj().T)
        assert t[0, 1] == 1j and t[1, 0] == -1j

    def test_errors(self):
        with pytest.raises(DomainError):
            toeplitz_hermitian([])
        with pytest.raises(DomainError):
            toeplitz_hermitian(np.array([1j, 0.0]))


class TestWhitener:
    def test_identity(self):
        assert np.allclose(whitener(np.eye(3)), np.eye(3))

    def test_scaled_identity(self):
        assert np.allclose(whitener(4 * np.eye(3)), 0.5 * np.eye(3))

    def test_random_pd(self, rng):
        r = random_pd(rng, 8)
        w = whitener(r)
        assert np.max(np.abs(w @ r @ w.conj().T - np.eye(8))) < 1e-9
        assert np.allclose(np.triu(w, 1), 0)

    def test_toeplitz_kron_input(self):
        r = kronecker(toeplitz_hermitian([1.0, 0.7, 0.3]), toeplitz_hermitian([2.0, 0.5]))
        w = whitener(r)
        assert np.max(np.abs(w @ r @ w.T - np.eye(6))) < 1e-9

    def test_singular_rejected(self):
        with pytest.raises(SingularityError):
            whitener(np.ones((3, 3)))
        with pytest.raises(SingularityError):
            whitener(np.diag([1.0, 1e-16]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2 ** 31 - 1))
    def test_property(self, n, seed):
        r = random_pd(np.random.default_rng(seed), n)
        w = whitener(r)
        assert np.max(np.abs(w @ r @ w.conj().T - np.eye(n))) < 1e-9


class TestPsdSqrt:
    def test_rank_deficient(self):
        a = np.array([1.0, 1j, -1.0])
        cov = np.outer(a, a.conj())
        f = psd_sqrt(cov)
        assert np.allclose(f @ f.conj().T, cov)

    def test_indefinite_rejected(self):
        with pytest.raises(DomainError):
            psd_sqrt(np.diag([1.0, -0.5]))


class TestFiniteDifference:
    def test_constant(self):
        jac = finite_difference_jacobian(lambda x: np.ones(3) * (1 + 2j), np.zeros(2))
        assert np.array_equal(jac, np.zeros((3, 2)))

    def test_linear(self, rng):
        a = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        jac = finite_difference_jacobian(lambda x: a @ x, rng.standard_normal(3))
        assert np.allclose(jac, a, atol=1e-9)

    def test_phase(self):
        x0 = np.array([0.3, -1.0])
        jac = finite_difference_jacobian(lambda x: np.exp(1j * x[0]) * np.ones(3), x0, step=1e-5)
        assert np.allclose(jac[:, 0], 1j * np.exp(1j * x0[0]), atol=1e-8)
        assert np.allclose(jac[:, 1], 0)
