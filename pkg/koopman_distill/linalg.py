"""
Dense linear algebra for the EDMD and PCA stages.

Every DenseMatrix is a 2-D float64 numpy array. All functions are pure:
inputs are never modified and outputs are checked to be finite.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from koopman_distill.error_handler import ConvergenceError, NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

DenseMatrix = NDArray[np.float64]


def as_matrix(a: ArrayLike, name: str = 'matrix') -> DenseMatrix:
    """
    Convert array-like input to a C-contiguous 2-D float64 array.

    Args:
        a: Array-like input (nested lists, ndarray)
        name: Operand name used in error messages

    Returns:
        2-D float64 ndarray

    Raises:
        ShapeError: If the input is not two-dimensional or is empty
        NonFiniteError: If the input contains NaN or Inf
    """
    matrix = np.ascontiguousarray(a, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError(f'{name} must be 2-D, got shape {matrix.shape}')
    if matrix.size == 0:
        raise ShapeError(f'{name} is empty (shape {matrix.shape})')
    return check_finite(matrix, name)


def check_finite(a: NDArray[np.float64], name: str = 'matrix') -> NDArray[np.float64]:
    """Return ``a`` unchanged, raising NonFiniteError if it holds NaN or Inf."""
    finite = np.isfinite(a)
    if not finite.all():
        raise NonFiniteError(name, int(a.size - np.count_nonzero(finite)))
    return a


def frobenius(a: ArrayLike) -> float:
    """Frobenius norm."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def default_rcond(a: DenseMatrix) -> float:
    """max(rows, cols) x machine epsilon, the usual pseudo-inverse cutoff."""
    return max(a.shape) * float(np.finfo(np.float64).eps)


def matmul(a: ArrayLike, b: ArrayLike) -> DenseMatrix:
    """
    Matrix product with explicit dimension checking.

    Args:
        a: Left operand (n x k)
        b: Right operand (k x m)

    Returns:
        n x m product

    Raises:
        ShapeError: If a.cols != b.rows
    """
    left = as_matrix(a, 'left operand')
    right = as_matrix(b, 'right operand')
    if left.shape[1] != right.shape[0]:
        raise ShapeError(
            f'Cannot multiply {left.shape[0]}x{left.shape[1]} by {right.shape[0]}x{right.shape[1]}'
        )
    return check_finite(left @ right, 'product')


def svd(a: ArrayLike) -> Tuple[DenseMatrix, NDArray[np.float64], DenseMatrix]:
    """
    Thin singular value decomposition A = U diag(s) Vt.

    Args:
        a: Non-empty matrix (n x m)

    Returns:
        Tuple (U, s, Vt) with U n x k, s length k in non-increasing order,
        Vt k x m, where k = min(n, m)

    Raises:
        ConvergenceError: If LAPACK gives up before converging
    """
    matrix = as_matrix(a, 'svd input')
    try:
        u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(details=f'{matrix.shape[0]}x{matrix.shape[1]} input: {e}') from e

    return (
        check_finite(u, 'U'),
        check_finite(s, 'singular values'),
        check_finite(vt, 'Vt'),
    )


def pinv(a: ArrayLike, rcond: Optional[float] = None) -> DenseMatrix:
    """
    Moore-Penrose pseudo-inverse.

    Singular values at or below ``rcond * s_max`` are treated as zero.

    Args:
        a: Non-empty matrix (n x m)
        rcond: Relative cutoff; defaults to max(n, m) x machine epsilon

    Returns:
        m x n pseudo-inverse

    Raises:
        ValueError: If rcond is negative
        ConvergenceError: If the underlying SVD fails
    """
    matrix = as_matrix(a, 'pinv input')
    if rcond is None:
        rcond = default_rcond(matrix)
    if rcond < 0:
        raise ValueError(f'rcond must be >= 0, got {rcond}')

    u, s, vt = svd(matrix)
    cutoff = rcond * s[0] if s.size else 0.0
    keep = s > cutoff
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]

    dropped = int(s.size - np.count_nonzero(keep))
    if dropped:
        logger.debug(f"pinv: dropped {dropped}/{s.size} singular values below {cutoff:.3e}")

    return check_finite((vt.T * s_inv) @ u.T, 'pseudo-inverse')
