"""
Configuration models for teacher training, student fitting and experiments

Defaults reproduce the published MNIST protocol: AdaDelta with rho 0.9,
weight decay 1e-4, initial learning rate 1.0 decayed x0.75 per epoch,
10 epochs of batch 32; distillation with alpha 0.9 and temperature 2.0.
"""

from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

from koopman_distill.error_handler import ConfigError

MNIST_LAYER_SIZES = [784, 20, 20, 20, 20, 20, 10]
METHODS = ('naive', 'naive-pca', 'distill')
TEACHER_SOURCES = ('train', 'model', 'logits')


def _known(cls, data: Dict[str, Any]) -> Dict[str, Any]:
    """Keep only keys that are dataclass fields of cls."""
    names = {f.name for f in fields(cls)}
    return {k: v for k, v in data.items() if k in names}


@dataclass
class OptimizerConfig:
    """AdaDelta hyperparameters shared by teacher and student training"""

    rho: float = 0.9
    eps: float = 1e-6
    weight_decay: float = 1e-4
    lr: float = 1.0
    lr_decay: float = 0.75

    def lr_at(self, epoch: int) -> float:
        """Learning-rate multiplier for a zero-based epoch."""
        return self.lr * self.lr_decay ** epoch

    def validate(self) -> None:
        if not 0.0 <= self.rho < 1.0:
            raise ConfigError(f"Invalid rho: {self.rho}. Must be in [0, 1)")
        if self.eps <= 0:
            raise ConfigError(f"Invalid eps: {self.eps}. Must be positive")
        if self.weight_decay < 0 or self.lr < 0:
            raise ConfigError("weight_decay and lr must be non-negative")
        if self.lr_decay <= 0:
            raise ConfigError(f"Invalid lr_decay: {self.lr_decay}. Must be positive")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'OptimizerConfig':
        return cls(**_known(cls, data or {}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rho': self.rho,
            'eps': self.eps,
            'weight_decay': self.weight_decay,
            'lr': self.lr,
            'lr_decay': self.lr_decay,
        }


@dataclass
class DatasetConfig:
    """IDX file locations for one dataset"""

    name: str = 'mnist'
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    num_classes: int = 10

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'DatasetConfig':
        return cls(**_known(cls, data or {}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'train_images': self.train_images,
            'train_labels': self.train_labels,
            'test_images': self.test_images,
            'test_labels': self.test_labels,
            'num_classes': self.num_classes,
        }


@dataclass
class TeacherConfig:
    """Where the teacher comes from and how it is trained"""

    source: str = 'train'
    model_path: Optional[str] = None
    logits_path: Optional[str] = None
    test_logits_path: Optional[str] = None
    layer_sizes: List[int] = field(default_factory=lambda: list(MNIST_LAYER_SIZES))
    first_hidden_linear: bool = True
    output_linear: bool = True
    use_bias: bool = True
    epochs: int = 10
    batch_size: int = 32
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def validate(self) -> None:
        if self.source not in TEACHER_SOURCES:
            raise ConfigError(f"Unknown teacher source {self.source!r}; use one of {TEACHER_SOURCES}")
        if self.source == 'model' and not self.model_path:
            raise ConfigError("teacher.source 'model' requires teacher.model_path")
        if self.source == 'logits' and not self.logits_path:
            raise ConfigError("teacher.source 'logits' requires teacher.logits_path")
        if len(self.layer_sizes) < 3 or min(self.layer_sizes) < 1:
            raise ConfigError(f"layer_sizes needs >= 3 positive sizes, got {self.layer_sizes}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("teacher epochs must be >= 0 and batch_size >= 1")
        self.optimizer.validate()

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'TeacherConfig':
        values = _known(cls, data or {})
        values['optimizer'] = OptimizerConfig.from_dict(values.get('optimizer'))
        if 'layer_sizes' in values:
            values['layer_sizes'] = [int(s) for s in values['layer_sizes']]
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'source': self.source,
            'model_path': self.model_path,
            'logits_path': self.logits_path,
            'test_logits_path': self.test_logits_path,
            'layer_sizes': list(self.layer_sizes),
            'first_hidden_linear': self.first_hidden_linear,
            'output_linear': self.output_linear,
            'use_bias': self.use_bias,
            'epochs': self.epochs,
            'batch_size': self.batch_size,
            'optimizer': self.optimizer.to_dict(),
        }


@dataclass
class StudentConfig:
    """PCA width, dictionary degree and least-squares cutoff"""

    pca_dim: int = 20
    degree: int = 2
    diagonal_only: bool = False
    scaling: str = 'standardize'
    scaler_epsilon: float = 1e-12
    rcond: float = 1e-10
    max_terms: int = 1_000_000

    def validate(self) -> None:
        if self.pca_dim < 1:
            raise ConfigError(f"Invalid pca_dim: {self.pca_dim}. Must be >= 1")
        if self.degree < 0:
            raise ConfigError(f"Invalid degree: {self.degree}. Must be >= 0")
        if self.scaling not in ('standardize', 'minmax'):
            raise ConfigError(f"Unknown scaling {self.scaling!r}")
        if self.scaler_epsilon <= 0 or self.rcond < 0:
            raise ConfigError("scaler_epsilon must be positive and rcond non-negative")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'StudentConfig':
        return cls(**_known(cls, data or {}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'pca_dim': self.pca_dim,
            'degree': self.degree,
            'diagonal_only': self.diagonal_only,
            'scaling': self.scaling,
            'scaler_epsilon': self.scaler_epsilon,
            'rcond': self.rcond,
            'max_terms': self.max_terms,
        }


@dataclass
class DistillConfig:
    """Knowledge-distillation settings for training K"""

    alpha: float = 0.9
    temperature: float = 2.0
    epochs: int = 10
    batch_size: int = 32
    apply_weight_decay: bool = False
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"Invalid alpha: {self.alpha}. Must be in [0, 1]")
        if self.temperature <= 0:
            raise ConfigError(f"Invalid temperature: {self.temperature}. Must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("distill epochs must be >= 0 and batch_size >= 1")
        self.optimizer.validate()

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'DistillConfig':
        values = _known(cls, data or {})
        values['optimizer'] = OptimizerConfig.from_dict(values.get('optimizer'))
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha,
            'temperature': self.temperature,
            'epochs': self.epochs,
            'batch_size': self.batch_size,
            'apply_weight_decay': self.apply_weight_decay,
            'optimizer': self.optimizer.to_dict(),
        }


@dataclass
class OutputConfig:
    """Report destinations"""

    dir: str = 'reports'
    csv: str = 'results.csv'
    json: str = 'results.json'

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'OutputConfig':
        return cls(**_known(cls, data or {}))

    def to_dict(self) -> Dict[str, Any]:
        return {'dir': self.dir, 'csv': self.csv, 'json': self.json}


@dataclass
class ExperimentConfig:
    """One multi-seed experiment"""

    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    student: StudentConfig = field(default_factory=StudentConfig)
    distill: DistillConfig = field(default_factory=DistillConfig)
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    seeds: List[int] = field(default_factory=lambda: list(range(10)))
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> None:
        """Check value ranges and cross-section consistency (not file existence)"""
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"Unknown method(s): {', '.join(unknown)}; use {', '.join(METHODS)}")
        if self.dataset.num_classes < 1:
            raise ConfigError("dataset.num_classes must be >= 1")
        self.teacher.validate()
        self.student.validate()
        self.distill.validate()

        if self.teacher.source == 'logits' and 'naive' in self.methods:
            raise ConfigError(
                "method 'naive' needs the teacher's weights",
                suggestion="Use teacher.source 'train' or 'model', or drop 'naive' from methods"
            )
        if self.teacher.layer_sizes[-1] != self.dataset.num_classes and self.teacher.source == 'train':
            raise ConfigError(
                f"teacher output width {self.teacher.layer_sizes[-1]} != num_classes {self.dataset.num_classes}"
            )

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'ExperimentConfig':
        data = data or {}
        config = cls(
            dataset=DatasetConfig.from_dict(data.get('dataset')),
            teacher=TeacherConfig.from_dict(data.get('teacher')),
            student=StudentConfig.from_dict(data.get('student')),
            distill=DistillConfig.from_dict(data.get('distill')),
            output=OutputConfig.from_dict(data.get('output')),
        )
        if 'methods' in data:
            config.methods = list(data['methods'])
        elif config.teacher.source == 'logits':
            config.methods = [m for m in METHODS if m != 'naive']
        if 'seeds' in data:
            config.seeds = [int(s) for s in data['seeds']]
        return config

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dataset': self.dataset.to_dict(),
            'teacher': self.teacher.to_dict(),
            'student': self.student.to_dict(),
            'distill': self.distill.to_dict(),
            'methods': list(self.methods),
            'seeds': list(self.seeds),
            'output': self.output.to_dict(),
        }
