"""
The teacher network: a fully connected ReLU MLP trained with AdaDelta on
softmax cross-entropy.

Weights are stored as (out, in) matrices, so a batch flows as
``a @ W.T + b``. ReLU is applied after every layer except the first hidden
layer (when ``first_hidden_linear``) and the output layer (when
``output_linear``). The teacher also exports its logits to a JSON file so
that externally trained networks can be distilled through the same path.
"""

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import log_softmax, softmax

from koopman_distill.dataset import epoch_seed, one_hot, shuffled_batches
from koopman_distill.error_handler import DivergenceError, ModelFileError, ShapeError
from koopman_distill.linalg import DenseMatrix, as_matrix, check_finite
from koopman_distill.models.config import MNIST_LAYER_SIZES, OptimizerConfig, TeacherConfig
from koopman_distill.models.report import EpochLog
from koopman_distill.utils.serialization import (
    LOGITS_FORMAT,
    TEACHER_FORMAT,
    read_model_file,
    write_model_file,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer widths and activation placement of a TeacherMlp"""

    layer_sizes: Tuple[int, ...]
    first_hidden_linear: bool = True
    output_linear: bool = True
    use_bias: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, 'layer_sizes', tuple(int(s) for s in self.layer_sizes))
        if len(self.layer_sizes) < 3:
            raise ShapeError(f'MLP needs at least 3 layer sizes, got {list(self.layer_sizes)}')
        if min(self.layer_sizes) < 1:
            raise ShapeError(f'Layer sizes must be >= 1, got {list(self.layer_sizes)}')

    @classmethod
    def mnist_default(cls) -> 'MlpArchitecture':
        """(784, 20, 20, 20, 20, 20, 10), linear first hidden and output layers."""
        return cls(tuple(MNIST_LAYER_SIZES))

    @classmethod
    def from_config(cls, config: TeacherConfig) -> 'MlpArchitecture':
        return cls(
            tuple(config.layer_sizes),
            first_hidden_linear=config.first_hidden_linear,
            output_linear=config.output_linear,
            use_bias=config.use_bias,
        )

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def num_classes(self) -> int:
        return self.layer_sizes[-1]

    @property
    def num_layers(self) -> int:
        """Number of weight matrices."""
        return len(self.layer_sizes) - 1

    def has_relu(self, layer: int) -> bool:
        if layer == 0 and self.first_hidden_linear:
            return False
        if layer == self.num_layers - 1 and self.output_linear:
            return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'layer_sizes': list(self.layer_sizes),
            'first_hidden_linear': self.first_hidden_linear,
            'output_linear': self.output_linear,
            'use_bias': self.use_bias,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MlpArchitecture':
        return cls(
            tuple(data['layer_sizes']),
            first_hidden_linear=bool(data.get('first_hidden_linear', True)),
            output_linear=bool(data.get('output_linear', True)),
            use_bias=bool(data.get('use_bias', True)),
        )


@dataclass(eq=False)
class TeacherMlp:
    """
    MLP parameters.

    Attributes:
        architecture: Layer widths and activation flags
        weights: W_l of shape (layer_sizes[l+1], layer_sizes[l])
        biases: b_l of length layer_sizes[l+1], or None without bias
    """

    architecture: MlpArchitecture
    weights: List[DenseMatrix]
    biases: Optional[List[NDArray[np.float64]]] = None

    def __post_init__(self) -> None:
        sizes = self.architecture.layer_sizes
        if len(self.weights) != self.architecture.num_layers:
            raise ShapeError(f'Expected {self.architecture.num_layers} weight matrices, got {len(self.weights)}')
        for l, w in enumerate(self.weights):
            if w.shape != (sizes[l + 1], sizes[l]):
                raise ShapeError(f'W{l} has shape {w.shape}, expected {(sizes[l + 1], sizes[l])}')
        if self.architecture.use_bias:
            if self.biases is None or len(self.biases) != len(self.weights):
                raise ShapeError('use_bias is set but biases are missing')
            for l, b in enumerate(self.biases):
                if b.shape != (sizes[l + 1],):
                    raise ShapeError(f'b{l} has shape {b.shape}, expected {(sizes[l + 1],)}')
        elif self.biases is not None:
            raise ShapeError('use_bias is off but biases were given')

    def parameters(self) -> List[NDArray[np.float64]]:
        """Flat parameter list [W0, b0, W1, b1, ...] (weights only without bias)."""
        if self.biases is None:
            return list(self.weights)
        params: List[NDArray[np.float64]] = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    @property
    def output_weight(self) -> DenseMatrix:
        return self.weights[-1]

    @property
    def output_bias(self) -> Optional[NDArray[np.float64]]:
        return None if self.biases is None else self.biases[-1]

    def predict_logits(self, features: ArrayLike) -> DenseMatrix:
        return forward(self, features)[0]

    def copy(self) -> 'TeacherMlp':
        return copy.deepcopy(self)


def init_mlp(architecture: MlpArchitecture, seed: int) -> TeacherMlp:
    """
    Kaiming-uniform initialization: W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), b = 0.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = architecture.layer_sizes
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
    biases = [np.zeros(n) for n in sizes[1:]] if architecture.use_bias else None
    return TeacherMlp(architecture, weights, biases)


def _forward_pass(
    mlp: TeacherMlp, features: ArrayLike
) -> Tuple[List[DenseMatrix], List[DenseMatrix]]:
    """Return (layer inputs incl. the final output, pre-activations)."""
    x = as_matrix(features, 'teacher input')
    if x.shape[1] != mlp.architecture.input_dim:
        raise ShapeError(f'Teacher expects {mlp.architecture.input_dim} features, got {x.shape[1]}')

    activations = [x]
    preacts = []
    a = x
    for l, w in enumerate(mlp.weights):
        z = a @ w.T
        if mlp.biases is not None:
            z = z + mlp.biases[l]
        preacts.append(z)
        a = np.maximum(z, 0.0) if mlp.architecture.has_relu(l) else z
        activations.append(a)
    return activations, preacts


def forward(mlp: TeacherMlp, features: ArrayLike) -> Tuple[DenseMatrix, List[DenseMatrix]]:
    """
    Evaluate the network on a B x D_in batch.

    Returns:
        Tuple (logits B x C, hidden) where hidden[0] is z_1 and hidden[-1] is z_L

    Raises:
        ShapeError: If the column count differs from the input width
    """
    activations, _ = _forward_pass(mlp, features)
    return activations[-1], activations[1:-1]


def loss_and_grads(
    mlp: TeacherMlp, features: ArrayLike, targets: ArrayLike
) -> Tuple[float, List[NDArray[np.float64]]]:
    """
    Mean softmax cross-entropy and its gradients.

    Args:
        mlp: Network
        features: B x D_in batch
        targets: B x C one-hot (or probability) rows

    Returns:
        Tuple (loss, grads) with grads aligned to ``mlp.parameters()``
    """
    activations, preacts = _forward_pass(mlp, features)
    logits = activations[-1]
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise ShapeError(f'Targets have shape {y.shape}, logits {logits.shape}')
    batch = logits.shape[0]

    loss = float(-np.sum(y * log_softmax(logits, axis=1)) / batch)

    arch = mlp.architecture
    delta = (softmax(logits, axis=1) - y) / batch
    weight_grads: List[NDArray[np.float64]] = [np.empty(0)] * arch.num_layers
    bias_grads: List[NDArray[np.float64]] = [np.empty(0)] * arch.num_layers
    for l in reversed(range(arch.num_layers)):
        if arch.has_relu(l):
            delta = delta * (preacts[l] > 0.0)
        weight_grads[l] = delta.T @ activations[l]
        bias_grads[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ mlp.weights[l]

    if mlp.biases is None:
        return loss, weight_grads
    grads: List[NDArray[np.float64]] = []
    for gw, gb in zip(weight_grads, bias_grads):
        grads.extend((gw, gb))
    return loss, grads


@dataclass
class AdaDeltaState:
    """
    Per-parameter AdaDelta accumulators.

    ``square_avg`` is the running E[g^2] and ``acc_delta`` the running
    E[dx^2]; ``lr`` is the multiplier applied to each update.
    """

    square_avg: List[NDArray[np.float64]]
    acc_delta: List[NDArray[np.float64]]
    rho: float = 0.9
    eps: float = 1e-6
    weight_decay: float = 0.0
    lr: float = 1.0


def init_adadelta(
    params: Sequence[NDArray[np.float64]],
    optimizer: Optional[OptimizerConfig] = None,
    weight_decay: Optional[float] = None,
) -> AdaDeltaState:
    """Zero accumulators shaped like ``params``; weight_decay overrides the config value."""
    optimizer = optimizer or OptimizerConfig()
    return AdaDeltaState(
        square_avg=[np.zeros_like(p) for p in params],
        acc_delta=[np.zeros_like(p) for p in params],
        rho=optimizer.rho,
        eps=optimizer.eps,
        weight_decay=optimizer.weight_decay if weight_decay is None else weight_decay,
        lr=optimizer.lr,
    )


def adadelta_step(
    state: AdaDeltaState,
    params: Sequence[NDArray[np.float64]],
    grads: Sequence[NDArray[np.float64]],
) -> None:
    """
    Apply one AdaDelta update in place.

    g <- g + weight_decay * p
    E[g^2] <- rho E[g^2] + (1 - rho) g^2
    dx = sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
    E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
    p <- p - lr * dx
    """
    if len(params) != len(grads) or len(params) != len(state.square_avg):
        raise ShapeError(f'{len(params)} parameters, {len(grads)} gradients, {len(state.square_avg)} accumulators')

    rho, eps = state.rho, state.eps
    for p, g, sq, acc in zip(params, grads, state.square_avg, state.acc_delta):
        if p.shape != g.shape:
            raise ShapeError(f'Parameter shape {p.shape} != gradient shape {g.shape}')
        if state.weight_decay:
            g = g + state.weight_decay * p
        sq *= rho
        sq += (1.0 - rho) * g * g
        delta = np.sqrt(acc + eps) / np.sqrt(sq + eps) * g
        acc *= rho
        acc += (1.0 - rho) * delta * delta
        p -= state.lr * delta


def train_teacher(
    mlp: TeacherMlp,
    features: DenseMatrix,
    labels: NDArray[np.int64],
    config: Optional[TeacherConfig] = None,
    seed: int = 0,
) -> Tuple[TeacherMlp, List[EpochLog]]:
    """
    Train a copy of ``mlp`` with minibatch AdaDelta.

    The learning-rate multiplier for epoch e is ``lr * lr_decay**e``; the
    batch order of epoch e is drawn from ``epoch_seed(seed, e)``.

    Returns:
        Tuple (trained network, per-epoch logs with running train accuracy)

    Raises:
        DivergenceError: If a batch loss is NaN or infinite
    """
    config = config or TeacherConfig()
    trained = mlp.copy()
    params = trained.parameters()
    state = init_adadelta(params, config.optimizer)
    num_classes = trained.architecture.num_classes
    n = features.shape[0]

    logs = []
    for epoch in range(config.epochs):
        state.lr = config.optimizer.lr_at(epoch)
        total_loss = 0.0
        correct = 0
        batches = shuffled_batches(features, labels, config.batch_size, epoch_seed(seed, epoch), num_classes)
        for index, batch in enumerate(batches):
            loss, grads = loss_and_grads(trained, batch.features, batch.onehot)
            if not np.isfinite(loss):
                raise DivergenceError(epoch, index, details=f'loss={loss}, lr={state.lr}')
            total_loss += loss * batch.size
            correct += int(np.count_nonzero(
                np.argmax(trained.predict_logits(batch.features), axis=1) == batch.labels
            ))
            adadelta_step(state, params, grads)

        entry = EpochLog(epoch=epoch, loss=total_loss / n, accuracy=correct / n, lr=state.lr)
        logs.append(entry)
        logger.info(
            f"teacher epoch {epoch + 1}/{config.epochs}: loss={entry.loss:.4f} "
            f"acc={entry.accuracy:.4f} lr={entry.lr:.4f}"
        )

    for p in params:
        check_finite(p, 'teacher parameters')
    return trained, logs


def cross_entropy(mlp: TeacherMlp, features: ArrayLike, labels: NDArray[np.int64]) -> float:
    """Mean cross-entropy of the network on labelled data."""
    return loss_and_grads(mlp, features, one_hot(labels, mlp.architecture.num_classes))[0]


def save_teacher(mlp: TeacherMlp, path: Union[str, Path]) -> Path:
    """Write the network as a versioned JSON model file."""
    return write_model_file(path, TEACHER_FORMAT, {
        'architecture': mlp.architecture.to_dict(),
        'weights': [w.tolist() for w in mlp.weights],
        'biases': None if mlp.biases is None else [b.tolist() for b in mlp.biases],
    })


def load_teacher(path: Union[str, Path]) -> TeacherMlp:
    """
    Read a network written by save_teacher.

    Raises:
        ModelFileError: On a malformed file or inconsistent shapes
    """
    document = read_model_file(path, TEACHER_FORMAT)
    try:
        architecture = MlpArchitecture.from_dict(document['architecture'])
        weights = [np.asarray(w, dtype=np.float64) for w in document['weights']]
        biases = document.get('biases')
        mlp = TeacherMlp(
            architecture,
            weights,
            None if biases is None else [np.asarray(b, dtype=np.float64) for b in biases],
        )
    except (ShapeError, ValueError, TypeError) as e:
        raise ModelFileError(str(path), 'inconsistent teacher parameters', details=str(e))
    for p in mlp.parameters():
        if not np.isfinite(p).all():
            raise ModelFileError(str(path), 'teacher parameters contain non-finite values')
    return mlp


@dataclass(eq=False)
class LogitsFile:
    """Teacher logits for one dataset split"""

    logits: DenseMatrix
    provenance: str = ''
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.logits.shape[0])

    @property
    def classes(self) -> int:
        return int(self.logits.shape[1])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'count': self.count,
            'classes': self.classes,
            'provenance': self.provenance,
            'metadata': self.metadata,
            'logits': self.logits.ravel().tolist(),
        }


def write_logits(logits_file: LogitsFile, path: Union[str, Path]) -> Path:
    check_finite(logits_file.logits, 'logits')
    return write_model_file(path, LOGITS_FORMAT, logits_file.to_dict())


def export_logits(
    mlp: TeacherMlp,
    features: ArrayLike,
    path: Union[str, Path],
    provenance: str = 'koopman-distill teacher',
) -> LogitsFile:
    """Evaluate the teacher on ``features`` and write the logits file."""
    logits_file = LogitsFile(
        logits=mlp.predict_logits(features),
        provenance=provenance,
        metadata={'architecture': mlp.architecture.to_dict()},
    )
    write_logits(logits_file, path)
    logger.info(f"Exported {logits_file.count}x{logits_file.classes} logits to {path}")
    return logits_file


def import_logits(path: Union[str, Path]) -> LogitsFile:
    """
    Read a logits file (bit-exact with what export_logits wrote).

    Raises:
        ModelFileError: If the flat array length disagrees with count x classes
            or holds non-finite values
    """
    document = read_model_file(path, LOGITS_FORMAT)
    count, classes = int(document['count']), int(document['classes'])
    try:
        flat = np.asarray(document['logits'], dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ModelFileError(str(path), 'logits are not numeric', details=str(e))
    if flat.ndim != 1 or flat.size != count * classes:
        raise ModelFileError(
            str(path), f'expected {count}x{classes}={count * classes} logits, found {flat.size}'
        )
    if not np.isfinite(flat).all():
        raise ModelFileError(str(path), 'logits contain non-finite values')
    return LogitsFile(
        logits=flat.reshape(count, classes),
        provenance=str(document['provenance']),
        metadata=dict(document.get('metadata') or {}),
    )
