import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from formseek.linalg import gauss_legendre_01, symmetric_eigenvalues, tridiagonal_eigenvalues, tridiagonalize


def sym(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return a + a.T


class TestEigen:
    @pytest.mark.parametrize("n", [1, 2, 3, 6, 12, 20])
    def test_matches_lapack(self, n):
        for seed in range(10):
            a = sym(n, seed)
            ev = symmetric_eigenvalues(a)
            np.testing.assert_allclose(ev, np.linalg.eigvalsh(a), atol=1e-12 * max(1, np.abs(a).max()))

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, (12, 12), elements=st.floats(-1e3, 1e3)))
    def test_property(self, m):
        a = m + m.T
        ev = symmetric_eigenvalues(a)
        scale = max(1.0, float(np.abs(a).max()))
        np.testing.assert_allclose(ev, np.linalg.eigvalsh(a), atol=1e-10 * scale * 12)
        assert np.all(np.diff(ev) >= 0)

    def test_tiny_householder_column(self):
        # reflector norm near 1e-240 used to overflow 2 / |v|^2
        m = np.zeros((12, 12))
        m[2, 7], m[5, 2], m[5, 6] = 9.788873813892826e-119, 729.7670644230144, 1.0
        a = m + m.T
        np.testing.assert_allclose(symmetric_eigenvalues(a), np.linalg.eigvalsh(a), atol=1e-9)

    def test_diagonal_and_repeated(self):
        np.testing.assert_array_equal(symmetric_eigenvalues(np.diag([3.0, -1.0, 3.0, 0.0])), [-1, 0, 3, 3])
        np.testing.assert_array_equal(symmetric_eigenvalues(np.zeros((5, 5))), np.zeros(5))

    def test_tridiagonal_preserves_trace_and_frobenius(self):
        a = sym(9, 4)
        d, e = tridiagonalize(a)
        assert d.sum() == pytest.approx(np.trace(a))
        assert (d @ d + 2 * e @ e) == pytest.approx(np.sum(a * a))

    def test_tridiagonal_direct(self):
        ev = tridiagonal_eigenvalues([2, 2, 2, 2], [-1, -1, -1])
        expected = 2 - 2 * np.cos(np.pi * np.arange(1, 5) / 5)
        np.testing.assert_allclose(ev, np.sort(expected), atol=1e-14)

    def test_non_square(self):
        with pytest.raises(ValueError):
            tridiagonalize(np.zeros((2, 3)))


class TestQuadrature:
    @pytest.mark.parametrize("order", [1, 4, 16])
    def test_polynomial_exactness(self, order):
        x, w = gauss_legendre_01(order)
        for k in range(2 * order):
            assert float(w @ x**k) == pytest.approx(1.0 / (k + 1), rel=1e-13)

    def test_kernel(self):
        x, w = gauss_legendre_01(16)
        assert float(w @ (1 - x)) == pytest.approx(0.5, rel=1e-15)

    def test_invalid(self):
        with pytest.raises(ValueError):
            gauss_legendre_01(0)
