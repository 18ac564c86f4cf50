"""
Student layers 1 and 2: PCA projection and per-component scaling.

PCA is computed from the SVD of the mean-centered data matrix. The input mean
is subtracted before projecting (z = U^T (x - mean)); the scaler that follows
absorbs any constant offset, so this matches the uncentered formula up to the
standardization step.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
from numpy.typing import ArrayLike, NDArray

from koopman_distill.error_handler import PcaError, ShapeError
from koopman_distill.linalg import DenseMatrix, as_matrix, svd

logger = logging.getLogger(__name__)

DEFAULT_SCALER_EPSILON = 1e-12
SCALING_METHODS = ('standardize', 'minmax')


@dataclass(frozen=True, eq=False)
class PcaModel:
    """
    Fitted PCA projection.

    Attributes:
        components: D_in x D matrix U, columns are orthonormal principal directions
        input_mean: Length-D_in training mean
        explained_ratio: Fraction of total variance per retained component
        singular_values: Singular values of the centered training matrix (retained only)
        n_samples: Number of rows the model was fit on
    """

    components: DenseMatrix
    input_mean: NDArray[np.float64]
    explained_ratio: NDArray[np.float64]
    singular_values: NDArray[np.float64]
    n_samples: int

    @property
    def input_dim(self) -> int:
        return int(self.components.shape[0])

    @property
    def dim(self) -> int:
        return int(self.components.shape[1])

    @property
    def cumulative_ratio(self) -> NDArray[np.float64]:
        return np.cumsum(self.explained_ratio)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'components': self.components.tolist(),
            'input_mean': self.input_mean.tolist(),
            'explained_ratio': self.explained_ratio.tolist(),
            'singular_values': self.singular_values.tolist(),
            'n_samples': self.n_samples,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PcaModel':
        return cls(
            components=np.asarray(data['components'], dtype=np.float64),
            input_mean=np.asarray(data['input_mean'], dtype=np.float64),
            explained_ratio=np.asarray(data['explained_ratio'], dtype=np.float64),
            singular_values=np.asarray(data['singular_values'], dtype=np.float64),
            n_samples=int(data['n_samples']),
        )


@dataclass(frozen=True, eq=False)
class Scaler:
    """
    Per-component affine scaling (z - mu) / max(sigma, epsilon).

    For ``method='standardize'`` mu/sigma are the column mean and population
    standard deviation; for ``'minmax'`` they are the column minimum and range.
    """

    mu: NDArray[np.float64]
    sigma: NDArray[np.float64]
    epsilon: float = DEFAULT_SCALER_EPSILON
    method: str = 'standardize'

    @property
    def dim(self) -> int:
        return int(self.mu.shape[0])

    @property
    def divisor(self) -> NDArray[np.float64]:
        return np.maximum(self.sigma, self.epsilon)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mu': self.mu.tolist(),
            'sigma': self.sigma.tolist(),
            'epsilon': self.epsilon,
            'method': self.method,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Scaler':
        return cls(
            mu=np.asarray(data['mu'], dtype=np.float64),
            sigma=np.asarray(data['sigma'], dtype=np.float64),
            epsilon=float(data.get('epsilon', DEFAULT_SCALER_EPSILON)),
            method=data.get('method', 'standardize'),
        )


def fit_pca(x: ArrayLike, dim: int) -> PcaModel:
    """
    Fit a D-component PCA on an N x D_in data matrix.

    Each component's sign is fixed so that its largest-magnitude entry is
    positive, which makes repeated fits on identical data bit-identical.

    Args:
        x: N x D_in training matrix (N >= 2)
        dim: Number of components D, 1 <= D <= min(N, D_in)

    Returns:
        Fitted PcaModel

    Raises:
        PcaError: If D is out of range, N < 2, or all rows are identical
    """
    data = as_matrix(x, 'PCA input')
    n, d_in = data.shape
    if n < 2:
        raise PcaError(f'PCA needs at least 2 samples, got {n}')
    if not 1 <= dim <= min(n, d_in):
        raise PcaError(f'pca_dim {dim} out of range 1..{min(n, d_in)}')

    mean = data.mean(axis=0)
    _, s, vt = svd(data - mean)
    total = float(np.sum(s ** 2))
    if total == 0.0:
        raise PcaError('PCA input is degenerate: all rows are identical')

    components = vt[:dim].T.copy()
    pivots = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[pivots, np.arange(dim)])
    components *= np.where(signs == 0, 1.0, signs)

    ratio = s[:dim] ** 2 / total
    logger.debug(
        f"PCA: {n}x{d_in} -> {dim} components, cumulative ratio {float(ratio.sum()):.4f}"
    )
    return PcaModel(
        components=components,
        input_mean=mean,
        explained_ratio=ratio,
        singular_values=s[:dim].copy(),
        n_samples=n,
    )


def pca_transform(model: PcaModel, x: ArrayLike) -> NDArray[np.float64]:
    """
    Project x (vector of length D_in, or N x D_in batch) to z = U^T (x - mean).

    Raises:
        ShapeError: If the trailing dimension is not D_in
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != model.input_dim:
        raise ShapeError(f'PCA expects {model.input_dim} features, got {arr.shape[-1]}')
    return (arr - model.input_mean) @ model.components


def components_for_ratio(model: PcaModel, target: float) -> int:
    """
    Smallest D whose cumulative contribution ratio reaches ``target``.

    Returns ``model.dim + 1`` when the retained components never reach it,
    signalling that a wider fit is required.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError(f'target ratio must be in (0, 1], got {target}')
    reached = np.nonzero(model.cumulative_ratio >= target - 1e-12)[0]
    return int(reached[0]) + 1 if reached.size else model.dim + 1


def fit_scaler(
    z: ArrayLike,
    epsilon: float = DEFAULT_SCALER_EPSILON,
    method: str = 'standardize',
) -> Scaler:
    """
    Fit column-wise scaling parameters on an N x D matrix.

    Args:
        z: N x D matrix (N >= 2)
        epsilon: Floor applied to sigma when dividing
        method: 'standardize' (mean / population std) or 'minmax' (min / range)

    Raises:
        ShapeError: If N < 2
        ValueError: If method is unknown
    """
    data = as_matrix(z, 'scaler input')
    if data.shape[0] < 2:
        raise ShapeError(f'Scaler needs at least 2 samples, got {data.shape[0]}')

    if method == 'standardize':
        mu = data.mean(axis=0)
        sigma = data.std(axis=0)
    elif method == 'minmax':
        mu = data.min(axis=0)
        sigma = data.max(axis=0) - mu
    else:
        raise ValueError(f'Unknown scaling method {method!r}; use one of {SCALING_METHODS}')

    constant = int(np.count_nonzero(sigma <= epsilon))
    if constant:
        logger.warning(f"Scaler: {constant} constant column(s); dividing by epsilon={epsilon}")
    return Scaler(mu=mu, sigma=sigma, epsilon=epsilon, method=method)


def standardize(scaler: Scaler, z: ArrayLike) -> NDArray[np.float64]:
    """
    Apply (z - mu) / max(sigma, epsilon) to a length-D vector or N x D batch.

    Raises:
        ShapeError: If the trailing dimension is not D
    """
    arr = np.asarray(z, dtype=np.float64)
    if arr.shape[-1] != scaler.dim:
        raise ShapeError(f'Scaler expects {scaler.dim} components, got {arr.shape[-1]}')
    return (arr - scaler.mu) / scaler.divisor
