"""
Knowledge distillation of the Koopman matrix.

The student's logits are y_s = psi^T K. Training minimizes

    L = alpha * T^2 * mean KL(p || q) + (1 - alpha) * mean CE(y, q_1)

where p and q are the teacher and student softmax at temperature T and q_1
is the student softmax at T = 1. The gradient with respect to K is
psi^T [alpha * T * (q - p) + (1 - alpha) * (q_1 - y)] / B.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import log_softmax, softmax

from koopman_distill.dataset import check_labels, epoch_seed, one_hot, shuffled_batches
from koopman_distill.dictionary import Dictionary
from koopman_distill.error_handler import DivergenceError, LogitsMismatchError, ShapeError
from koopman_distill.koopman import LinearStudent
from koopman_distill.linalg import DenseMatrix, as_matrix
from koopman_distill.models.config import DistillConfig
from koopman_distill.models.report import EpochLog
from koopman_distill.preprocess import PcaModel, Scaler
from koopman_distill.teacher import AdaDeltaState, LogitsFile, TeacherMlp, adadelta_step, init_adadelta

logger = logging.getLogger(__name__)

TeacherLogitsSource = Union[DenseMatrix, LogitsFile, TeacherMlp]


@dataclass(frozen=True, eq=False)
class SoftTargets:
    """Teacher (p) and student (q) probabilities at T, student (q1) at T = 1"""

    p: DenseMatrix
    q: DenseMatrix
    q1: DenseMatrix


def softmax_T(logits: ArrayLike, temperature: float = 1.0) -> NDArray[np.float64]:
    """Temperature softmax over the last axis, stabilized by max subtraction."""
    if temperature <= 0:
        raise ValueError(f'temperature must be positive, got {temperature}')
    return softmax(np.asarray(logits, dtype=np.float64) / temperature, axis=-1)


def _check_pair(teacher_logits: ArrayLike, student_logits: ArrayLike) -> Tuple[DenseMatrix, DenseMatrix]:
    y_t = np.atleast_2d(np.asarray(teacher_logits, dtype=np.float64))
    y_s = np.atleast_2d(np.asarray(student_logits, dtype=np.float64))
    if y_t.shape != y_s.shape:
        raise ShapeError(f'Teacher logits {y_t.shape} vs student logits {y_s.shape}')
    return y_t, y_s


def _loss_terms(
    y_t: DenseMatrix,
    y_s: DenseMatrix,
    labels: NDArray[np.int64],
    alpha: float,
    temperature: float,
) -> Tuple[float, SoftTargets]:
    log_p = log_softmax(y_t / temperature, axis=1)
    log_q = log_softmax(y_s / temperature, axis=1)
    log_q1 = log_softmax(y_s, axis=1)
    batch = y_t.shape[0]

    kl = float(np.sum(np.exp(log_p) * (log_p - log_q)) / batch)
    ce = float(-np.sum(log_q1[np.arange(batch), labels]) / batch)
    loss = alpha * temperature ** 2 * kl + (1.0 - alpha) * ce
    return loss, SoftTargets(p=np.exp(log_p), q=np.exp(log_q), q1=np.exp(log_q1))


def kd_loss(
    teacher_logits: ArrayLike,
    student_logits: ArrayLike,
    labels: ArrayLike,
    alpha: float = 0.9,
    temperature: float = 2.0,
) -> Tuple[float, SoftTargets]:
    """
    Distillation loss for a batch.

    Args:
        teacher_logits: B x C teacher logits
        student_logits: B x C student logits
        labels: B label indices
        alpha: Weight of the KL term
        temperature: Softmax temperature T > 0

    Returns:
        Tuple (loss, SoftTargets)

    Raises:
        LabelRangeError: If a label is outside [0, C)
    """
    if temperature <= 0:
        raise ValueError(f'temperature must be positive, got {temperature}')
    y_t, y_s = _check_pair(teacher_logits, student_logits)
    label_idx = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if label_idx.shape != (y_t.shape[0],):
        raise ShapeError(f'{label_idx.shape[0]} labels for {y_t.shape[0]} logit rows')
    check_labels(label_idx, y_t.shape[1])
    return _loss_terms(y_t, y_s, label_idx, alpha, temperature)


def _output_gradient(
    targets: SoftTargets, onehot: DenseMatrix, alpha: float, temperature: float
) -> DenseMatrix:
    batch = onehot.shape[0]
    return (alpha * temperature * (targets.q - targets.p) + (1.0 - alpha) * (targets.q1 - onehot)) / batch


def kd_loss_grad(
    psi: ArrayLike,
    teacher_logits: ArrayLike,
    labels: ArrayLike,
    koopman: ArrayLike,
    alpha: float = 0.9,
    temperature: float = 2.0,
) -> DenseMatrix:
    """
    Gradient of kd_loss with respect to K for student logits psi K.

    Args:
        psi: B x M lifted batch
        teacher_logits: B x C
        labels: B label indices
        koopman: M x C matrix

    Returns:
        M x C gradient
    """
    lifted = as_matrix(psi, 'psi batch')
    k = as_matrix(koopman, 'K')
    if lifted.shape[1] != k.shape[0]:
        raise ShapeError(f'psi has {lifted.shape[1]} columns, K has {k.shape[0]} rows')
    _, targets = kd_loss(teacher_logits, lifted @ k, labels, alpha, temperature)
    onehot = one_hot(np.atleast_1d(np.asarray(labels, dtype=np.int64)), k.shape[1])
    return lifted.T @ _output_gradient(targets, onehot, alpha, temperature)


def check_logits(logits: ArrayLike, count: int, num_classes: int, source: str = 'teacher logits') -> DenseMatrix:
    """
    Verify teacher logits cover every training sample.

    Raises:
        LogitsMismatchError: On a count or class-count mismatch
    """
    matrix = np.asarray(logits, dtype=np.float64)
    if matrix.ndim != 2:
        raise LogitsMismatchError(f'{source} must be 2-D, got shape {matrix.shape}')
    if matrix.shape[0] != count:
        raise LogitsMismatchError(f'{source} has {matrix.shape[0]} rows for {count} training samples')
    if matrix.shape[1] != num_classes:
        raise LogitsMismatchError(f'{source} has {matrix.shape[1]} classes, expected {num_classes}')
    return as_matrix(matrix, source)


def resolve_teacher_logits(
    source: TeacherLogitsSource, features: DenseMatrix, num_classes: int
) -> DenseMatrix:
    """Cached teacher logits for every training row, from a matrix, LogitsFile or live network."""
    if isinstance(source, TeacherMlp):
        logits = source.predict_logits(features)
        name = 'teacher network logits'
    elif isinstance(source, LogitsFile):
        logits = source.logits
        name = f'logits file ({source.provenance or "no provenance"})'
    else:
        logits = source
        name = 'teacher logits'
    return check_logits(logits, features.shape[0], num_classes, name)


def train_student(
    features: DenseMatrix,
    labels: NDArray[np.int64],
    teacher_logits: TeacherLogitsSource,
    pca: Optional[PcaModel],
    scaler: Optional[Scaler],
    dictionary: Dictionary,
    config: Optional[DistillConfig] = None,
    initial_koopman: Optional[DenseMatrix] = None,
) -> Tuple[LinearStudent, List[EpochLog]]:
    """
    Train K by distillation with AdaDelta.

    K starts at zero unless ``initial_koopman`` is given; the seed in
    ``config`` only drives the batch order.

    Returns:
        Tuple (student of kind 'distill', per-epoch logs of running loss and accuracy)

    Raises:
        LogitsMismatchError: If teacher logits do not match the training set
        DivergenceError: If a batch loss is NaN or infinite
    """
    config = config or DistillConfig()
    targets = resolve_teacher_logits(teacher_logits, features, _num_classes(teacher_logits, labels))
    num_classes = targets.shape[1]
    if labels.shape[0] != features.shape[0]:
        raise ShapeError(f'{features.shape[0]} feature rows but {labels.shape[0]} labels')

    koopman = (
        np.zeros((dictionary.size, num_classes))
        if initial_koopman is None
        else np.array(initial_koopman, dtype=np.float64)
    )
    student = LinearStudent('distill', dictionary, koopman, pca=pca, scaler=scaler)
    state: AdaDeltaState = init_adadelta(
        [koopman],
        config.optimizer,
        weight_decay=config.optimizer.weight_decay if config.apply_weight_decay else 0.0,
    )

    n = features.shape[0]
    logs = []
    for epoch in range(config.epochs):
        state.lr = config.optimizer.lr_at(epoch)
        total_loss = 0.0
        correct = 0
        batches = shuffled_batches(features, labels, config.batch_size, epoch_seed(config.seed, epoch), num_classes)
        for index, batch in enumerate(batches):
            psi = student.encode(batch.features)
            y_s = psi @ koopman
            loss, soft = _loss_terms(
                targets[batch.indices], y_s, batch.labels, config.alpha, config.temperature
            )
            if not np.isfinite(loss):
                raise DivergenceError(epoch, index, details=f'loss={loss}, lr={state.lr}')
            total_loss += loss * batch.size
            correct += int(np.count_nonzero(np.argmax(y_s, axis=1) == batch.labels))
            grad = psi.T @ _output_gradient(soft, batch.onehot, config.alpha, config.temperature)
            adadelta_step(state, [koopman], [grad])

        entry = EpochLog(epoch=epoch, loss=total_loss / n, accuracy=correct / n, lr=state.lr)
        logs.append(entry)
        logger.info(
            f"distill epoch {epoch + 1}/{config.epochs}: loss={entry.loss:.4f} "
            f"acc={entry.accuracy:.4f} lr={entry.lr:.4f}"
        )

    return student.with_koopman(koopman.copy()), logs


def _num_classes(source: TeacherLogitsSource, labels: NDArray[np.int64]) -> int:
    if isinstance(source, TeacherMlp):
        return source.architecture.num_classes
    if isinstance(source, LogitsFile):
        return source.classes
    matrix = np.asarray(source)
    return int(matrix.shape[1]) if matrix.ndim == 2 else int(labels.max()) + 1
