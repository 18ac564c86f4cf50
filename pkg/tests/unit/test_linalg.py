"""
Unit tests for dense linear algebra helpers
"""

import numpy as np
import pytest

from koopman_distill.error_handler import NonFiniteError, ShapeError
from koopman_distill.linalg import as_matrix, default_rcond, frobenius, matmul, pinv, svd


class TestAsMatrix:
    """Test input normalization"""

    def test_converts_nested_lists(self):
        m = as_matrix([[1, 2], [3, 4]])
        assert m.dtype == np.float64
        assert m.flags['C_CONTIGUOUS']

    def test_rejects_vector(self):
        with pytest.raises(ShapeError):
            as_matrix([1.0, 2.0])

    def test_rejects_empty(self):
        with pytest.raises(ShapeError):
            as_matrix(np.zeros((0, 3)))

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError) as exc:
            as_matrix([[1.0, np.nan], [np.inf, 0.0]], 'G')
        assert exc.value.count == 2
        assert 'G' in exc.value.message


class TestMatmul:
    """Test checked matrix product"""

    def test_product(self):
        np.testing.assert_array_equal(matmul([[1, 2]], [[3], [4]]), [[11.0]])

    def test_inner_dimension_mismatch(self):
        with pytest.raises(ShapeError, match='Cannot multiply 2x3 by 2x3'):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_associative(self, rng):
        for _ in range(20):
            a, b, c = rng.standard_normal((3, 10, 10))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            scale = frobenius(a) * frobenius(b) * frobenius(c)
            np.testing.assert_allclose(left, right, rtol=0, atol=1e-12 * scale)


class TestSvd:
    """Test thin SVD wrapper"""

    def test_reconstruction_and_order(self, rng):
        a = rng.standard_normal((7, 4))
        u, s, vt = svd(a)
        assert u.shape == (7, 4) and s.shape == (4,) and vt.shape == (4, 4)
        assert np.all(np.diff(s) <= 0)
        np.testing.assert_allclose((u * s) @ vt, a, atol=1e-12)

    def test_diagonal_matrix(self):
        u, s, vt = svd(np.diag([3.0, 2.0]))
        np.testing.assert_allclose(s, [3.0, 2.0], atol=1e-14)
        np.testing.assert_allclose(np.abs(u), np.eye(2), atol=1e-14)
        np.testing.assert_allclose(np.abs(vt), np.eye(2), atol=1e-14)
        np.testing.assert_allclose((u * s) @ vt, np.diag([3.0, 2.0]), atol=1e-14)

    def test_rank_one_matrix(self):
        _, s, _ = svd([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(s, [2.0, 0.0], atol=1e-12)

    def test_identity(self):
        _, s, _ = svd(np.eye(3))
        np.testing.assert_allclose(s, [1.0, 1.0, 1.0], atol=1e-14)


class TestPinv:
    """Test Moore-Penrose pseudo-inverse"""

    @staticmethod
    def _assert_penrose(a, a_pinv, tol=1e-8):
        scale_a = max(1.0, frobenius(a))
        scale_p = max(1.0, frobenius(a_pinv))
        assert frobenius(a @ a_pinv @ a - a) <= tol * scale_a
        assert frobenius(a_pinv @ a @ a_pinv - a_pinv) <= tol * scale_p
        assert frobenius((a @ a_pinv).T - a @ a_pinv) <= tol
        assert frobenius((a_pinv @ a).T - a_pinv @ a) <= tol

    def test_penrose_identities_random(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n, m = rng.integers(1, 51, size=2)
            a = rng.standard_normal((n, m))
            self._assert_penrose(a, pinv(a))

    def test_penrose_identities_rank_deficient(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            rank = int(rng.integers(1, 5))
            a = rng.standard_normal((12, rank)) @ rng.standard_normal((rank, 9))
            self._assert_penrose(a, pinv(a, rcond=1e-10))

    def test_square_nonsingular_is_inverse(self):
        a = np.array([[2.0, 1.0], [1.0, 3.0]])
        np.testing.assert_allclose(pinv(a), np.linalg.inv(a), atol=1e-14)

    def test_zero_matrix(self):
        np.testing.assert_array_equal(pinv(np.zeros((3, 2))), np.zeros((2, 3)))

    def test_double_pinv_recovers_matrix(self, rng):
        a = rng.standard_normal((5, 3))
        np.testing.assert_allclose(pinv(pinv(a)), a, atol=1e-8)

    def test_cutoff_drops_small_singular_values(self):
        a = np.diag([1.0, 1e-12])
        np.testing.assert_allclose(pinv(a, rcond=1e-10), np.diag([1.0, 0.0]))

    def test_negative_rcond(self):
        with pytest.raises(ValueError):
            pinv(np.eye(2), rcond=-1.0)

    def test_default_rcond(self):
        assert default_rcond(np.zeros((3, 10))) == 10 * np.finfo(np.float64).eps
