"""
EDMD least-squares fitting of the Koopman matrix and the two baseline
students built from it.

K is fitted as pinv(G) A with G = Psi_in^T Psi_in / N and
A = Psi_in^T Psi_out / N. Both are accumulated in chunks, so the lifted
matrices of a full training split are never held in memory at once.
Rectangular K (M x D_out) is allowed.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from koopman_distill.dictionary import Dictionary, build_dictionary, lift
from koopman_distill.error_handler import ModelFileError, ShapeError
from koopman_distill.linalg import DenseMatrix, as_matrix, check_finite, pinv
from koopman_distill.models.config import StudentConfig
from koopman_distill.preprocess import PcaModel, Scaler, fit_pca, fit_scaler, pca_transform, standardize
from koopman_distill.teacher import TeacherMlp, forward
from koopman_distill.utils.serialization import STUDENT_FORMAT, read_model_file, write_model_file

logger = logging.getLogger(__name__)

DEFAULT_RCOND = 1e-10
DEFAULT_CHUNK_SIZE = 4096
STUDENT_KINDS = ('naive', 'naive-pca', 'distill')


def _chunks(n: int, chunk_size: int) -> Iterator[slice]:
    for start in range(0, n, chunk_size):
        yield slice(start, min(start + chunk_size, n))


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """Lifted snapshot pairs: row n of psi_in maps to row n of psi_out"""

    psi_in: DenseMatrix
    psi_out: DenseMatrix

    def __post_init__(self) -> None:
        psi_in = as_matrix(self.psi_in, 'Psi_in')
        psi_out = as_matrix(self.psi_out, 'Psi_out')
        if psi_in.shape[0] != psi_out.shape[0]:
            raise ShapeError(f'Psi_in has {psi_in.shape[0]} rows, Psi_out has {psi_out.shape[0]}')
        object.__setattr__(self, 'psi_in', psi_in)
        object.__setattr__(self, 'psi_out', psi_out)

    @property
    def count(self) -> int:
        return int(self.psi_in.shape[0])


class GramAccumulator:
    """
    Running sums of Psi_in^T Psi_in and Psi_in^T Psi_out.

    Chunks are added in call order; the same chunk sequence always gives the
    same bits.
    """

    def __init__(self, input_size: int, output_size: int):
        self.input_size = input_size
        self.output_size = output_size
        self._gram = np.zeros((input_size, input_size))
        self._cross = np.zeros((input_size, output_size))
        self.count = 0

    def add(self, psi_in: ArrayLike, psi_out: ArrayLike) -> None:
        left = as_matrix(psi_in, 'Psi_in chunk')
        right = as_matrix(psi_out, 'Psi_out chunk')
        if left.shape[1] != self.input_size or right.shape[1] != self.output_size:
            raise ShapeError(
                f'Chunk widths {left.shape[1]}/{right.shape[1]} != '
                f'{self.input_size}/{self.output_size}'
            )
        if left.shape[0] != right.shape[0]:
            raise ShapeError(f'Chunk has {left.shape[0]} input rows but {right.shape[0]} output rows')
        self._gram += left.T @ left
        self._cross += left.T @ right
        self.count += left.shape[0]

    def matrices(self) -> Tuple[DenseMatrix, DenseMatrix]:
        """(G, A), both normalized by the sample count."""
        if self.count == 0:
            raise ShapeError('No snapshot pairs were accumulated')
        return self._gram / self.count, self._cross / self.count


def edmd_fit(
    snapshots: Union[SnapshotSet, GramAccumulator],
    rcond: float = DEFAULT_RCOND,
) -> DenseMatrix:
    """
    Least-squares Koopman matrix K = pinv(G) A.

    Args:
        snapshots: Snapshot pairs, or an accumulator already holding them
        rcond: Relative singular-value cutoff for the pseudo-inverse of G

    Returns:
        M x D_out matrix minimizing sum_n ||psi_out_n - K^T psi_in_n||^2
        (minimum-norm when G is singular)
    """
    if isinstance(snapshots, SnapshotSet):
        accumulator = GramAccumulator(snapshots.psi_in.shape[1], snapshots.psi_out.shape[1])
        accumulator.add(snapshots.psi_in, snapshots.psi_out)
    else:
        accumulator = snapshots

    gram, cross = accumulator.matrices()
    koopman = pinv(gram, rcond) @ cross
    logger.debug(
        f"EDMD: N={accumulator.count}, K {koopman.shape[0]}x{koopman.shape[1]}, rcond={rcond}"
    )
    return check_finite(koopman, 'Koopman matrix')


def fold_output(
    koopman: ArrayLike,
    output_weight: ArrayLike,
    output_bias: Optional[ArrayLike] = None,
) -> DenseMatrix:
    """
    Fold the teacher's output layer into K: K' = K W_out^T.

    With ``output_bias`` the bias is added to row 0, which multiplies the
    constant dictionary term, so K'^T psi = W_out K^T psi + b_out.

    Raises:
        ShapeError: If K's width differs from W_out's input width
    """
    k = as_matrix(koopman, 'K')
    w = as_matrix(output_weight, 'W_out')
    if k.shape[1] != w.shape[1]:
        raise ShapeError(f'K is {k.shape[0]}x{k.shape[1]} but W_out is {w.shape[0]}x{w.shape[1]}')
    folded = k @ w.T
    if output_bias is not None:
        bias = np.asarray(output_bias, dtype=np.float64)
        if bias.shape != (w.shape[0],):
            raise ShapeError(f'b_out has shape {bias.shape}, expected {(w.shape[0],)}')
        folded[0] += bias
    return folded


@dataclass(frozen=True, eq=False)
class FirstLayer:
    """The teacher's first dense layer, kept by naive students"""

    weight: DenseMatrix
    bias: Optional[NDArray[np.float64]] = None
    relu: bool = False

    @property
    def input_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.weight.shape[0])

    def apply(self, x: ArrayLike) -> NDArray[np.float64]:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[-1] != self.input_dim:
            raise ShapeError(f'First layer expects {self.input_dim} features, got {arr.shape[-1]}')
        z = arr @ self.weight.T
        if self.bias is not None:
            z = z + self.bias
        return np.maximum(z, 0.0) if self.relu else z

    def to_dict(self) -> Dict[str, Any]:
        return {
            'weight': self.weight.tolist(),
            'bias': None if self.bias is None else self.bias.tolist(),
            'relu': self.relu,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FirstLayer':
        bias = data.get('bias')
        return cls(
            weight=np.asarray(data['weight'], dtype=np.float64),
            bias=None if bias is None else np.asarray(bias, dtype=np.float64),
            relu=bool(data.get('relu', False)),
        )

    @classmethod
    def from_teacher(cls, teacher: TeacherMlp) -> 'FirstLayer':
        return cls(
            weight=teacher.weights[0].copy(),
            bias=None if teacher.biases is None else teacher.biases[0].copy(),
            relu=teacher.architecture.has_relu(0),
        )


@dataclass(frozen=True, eq=False)
class LinearStudent:
    """
    Linear classifier y = K^T psi(encode(x)).

    The encoder is either PCA followed by the scaler (naive-pca, distill) or
    the teacher's first layer (naive).
    """

    kind: str
    dictionary: Dictionary
    koopman: DenseMatrix
    pca: Optional[PcaModel] = None
    scaler: Optional[Scaler] = None
    first_layer: Optional[FirstLayer] = None

    def __post_init__(self) -> None:
        if self.kind not in STUDENT_KINDS:
            raise ValueError(f'Unknown student kind {self.kind!r}')
        if self.koopman.ndim != 2 or self.koopman.shape[0] != self.dictionary.size:
            raise ShapeError(
                f'K has shape {self.koopman.shape}, expected {self.dictionary.size} rows'
            )
        check_finite(self.koopman, 'Koopman matrix')
        if self.encoded_dim != self.dictionary.input_dim:
            raise ShapeError(
                f'Encoder produces {self.encoded_dim} values, dictionary expects {self.dictionary.input_dim}'
            )

    @property
    def num_classes(self) -> int:
        return int(self.koopman.shape[1])

    @property
    def encoded_dim(self) -> int:
        if self.first_layer is not None:
            return self.first_layer.output_dim
        if self.pca is not None:
            return self.pca.dim
        return self.dictionary.input_dim

    def reduce(self, x: ArrayLike) -> NDArray[np.float64]:
        """Map raw features to the dictionary's input space."""
        if self.first_layer is not None:
            return self.first_layer.apply(x)
        z = np.asarray(x, dtype=np.float64)
        if self.pca is not None:
            z = pca_transform(self.pca, z)
        if self.scaler is not None:
            z = standardize(self.scaler, z)
        return z

    def encode(self, x: ArrayLike) -> NDArray[np.float64]:
        """psi(reduce(x)) for a vector or batch."""
        return lift(self.dictionary, self.reduce(x))

    def predict_logits(self, features: ArrayLike, chunk_size: int = DEFAULT_CHUNK_SIZE) -> DenseMatrix:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        out = np.empty((x.shape[0], self.num_classes))
        for rows in _chunks(x.shape[0], chunk_size):
            out[rows] = self.encode(x[rows]) @ self.koopman
        return out

    def with_koopman(self, koopman: DenseMatrix, kind: Optional[str] = None) -> 'LinearStudent':
        return LinearStudent(
            kind=kind or self.kind,
            dictionary=self.dictionary,
            koopman=koopman,
            pca=self.pca,
            scaler=self.scaler,
            first_layer=self.first_layer,
        )


def fit_preprocessing(
    features: DenseMatrix, config: Optional[StudentConfig] = None
) -> Tuple[PcaModel, Scaler, Dictionary]:
    """Fit PCA and the scaler on training features and build the dictionary."""
    config = config or StudentConfig()
    pca = fit_pca(features, config.pca_dim)
    scaler = fit_scaler(pca_transform(pca, features), config.scaler_epsilon, config.scaling)
    dictionary = build_dictionary(
        config.pca_dim, config.degree, config.diagonal_only, config.max_terms
    )
    return pca, scaler, dictionary


def naive_pipeline(
    teacher: TeacherMlp,
    features: DenseMatrix,
    dictionary: Dictionary,
    rcond: float = DEFAULT_RCOND,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> LinearStudent:
    """
    Replace the teacher's hidden stack by one Koopman matrix.

    Snapshot pairs are (psi(z_1), z_L) from the teacher's forward pass; the
    fitted K is folded with the output layer so the student maps
    x -> z_1 -> psi -> K'^T psi.

    Raises:
        ShapeError: If the dictionary width differs from the first hidden width
    """
    hidden_width = teacher.architecture.layer_sizes[1]
    last_width = teacher.architecture.layer_sizes[-2]
    if dictionary.input_dim != hidden_width:
        raise ShapeError(f'Dictionary has D={dictionary.input_dim}, first hidden layer has {hidden_width}')
    if not teacher.architecture.output_linear:
        logger.warning("Teacher output layer has ReLU; folding W_out into K drops it")

    accumulator = GramAccumulator(dictionary.size, last_width)
    for rows in _chunks(features.shape[0], chunk_size):
        _, hidden = forward(teacher, features[rows])
        accumulator.add(lift(dictionary, hidden[0]), hidden[-1])

    koopman = edmd_fit(accumulator, rcond)
    folded = fold_output(koopman, teacher.output_weight, teacher.output_bias)
    logger.info(f"naive: fitted K {koopman.shape[0]}x{koopman.shape[1]} on {accumulator.count} samples")
    return LinearStudent(
        kind='naive',
        dictionary=dictionary,
        koopman=folded,
        first_layer=FirstLayer.from_teacher(teacher),
    )


def naive_pca_pipeline(
    features: DenseMatrix,
    targets: DenseMatrix,
    pca: PcaModel,
    scaler: Optional[Scaler],
    dictionary: Dictionary,
    rcond: float = DEFAULT_RCOND,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
) -> LinearStudent:
    """
    Least-squares fit from psi(standardize(pca(x))) to one-hot targets.

    Raises:
        ShapeError: If feature and target row counts differ
    """
    if features.shape[0] != targets.shape[0]:
        raise ShapeError(f'{features.shape[0]} feature rows but {targets.shape[0]} target rows')
    template = LinearStudent(
        kind='naive-pca',
        dictionary=dictionary,
        koopman=np.zeros((dictionary.size, targets.shape[1])),
        pca=pca,
        scaler=scaler,
    )
    accumulator = GramAccumulator(dictionary.size, targets.shape[1])
    for rows in _chunks(features.shape[0], chunk_size):
        accumulator.add(template.encode(features[rows]), targets[rows])

    koopman = edmd_fit(accumulator, rcond)
    logger.info(f"naive-pca: fitted K {koopman.shape[0]}x{koopman.shape[1]} on {accumulator.count} samples")
    return template.with_koopman(koopman)


def save_student(student: LinearStudent, path: Union[str, Path]) -> Path:
    return write_model_file(path, STUDENT_FORMAT, {
        'kind': student.kind,
        'dictionary': student.dictionary.to_dict(),
        'pca': None if student.pca is None else student.pca.to_dict(),
        'scaler': None if student.scaler is None else student.scaler.to_dict(),
        'first_layer': None if student.first_layer is None else student.first_layer.to_dict(),
        'K': student.koopman.tolist(),
    })


def load_student(path: Union[str, Path]) -> LinearStudent:
    """
    Read a student written by save_student.

    Raises:
        ModelFileError: On a malformed file or inconsistent shapes
    """
    document = read_model_file(path, STUDENT_FORMAT)
    try:
        pca = document.get('pca')
        scaler = document.get('scaler')
        first_layer = document.get('first_layer')
        return LinearStudent(
            kind=document['kind'],
            dictionary=Dictionary.from_dict(document['dictionary']),
            koopman=np.asarray(document['K'], dtype=np.float64),
            pca=None if pca is None else PcaModel.from_dict(pca),
            scaler=None if scaler is None else Scaler.from_dict(scaler),
            first_layer=None if first_layer is None else FirstLayer.from_dict(first_layer),
        )
    except (ShapeError, ValueError, TypeError, KeyError) as e:
        raise ModelFileError(str(path), 'inconsistent student parameters', details=str(e))
