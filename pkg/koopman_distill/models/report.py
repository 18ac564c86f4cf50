"""
Training logs and experiment report models
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

CSV_COLUMNS = ('seed', 'method', 'pca_dim', 'degree', 'dict_size', 'accuracy', 'epochs', 'wall_ms')


@dataclass
class EpochLog:
    """One epoch of teacher or student training"""

    epoch: int
    loss: float
    accuracy: float
    lr: float

    def to_dict(self) -> Dict[str, Any]:
        return {'epoch': self.epoch, 'loss': self.loss, 'accuracy': self.accuracy, 'lr': self.lr}


@dataclass
class SeedResult:
    """Outcome of one (seed, method) cell; ``error`` is set when the cell failed"""

    seed: int
    method: str
    accuracy: Optional[float] = None
    pca_dim: Optional[int] = None
    degree: Optional[int] = None
    dict_size: Optional[int] = None
    epochs: int = 0
    wall_ms: int = 0
    log: List[EpochLog] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_row(self) -> Dict[str, Any]:
        """CSV row; missing values are written as empty cells."""
        row = {
            'seed': self.seed,
            'method': self.method,
            'pca_dim': self.pca_dim,
            'degree': self.degree,
            'dict_size': self.dict_size,
            'accuracy': repr(self.accuracy) if self.accuracy is not None else None,
            'epochs': self.epochs,
            'wall_ms': self.wall_ms,
        }
        return {k: ('' if v is None else v) for k, v in row.items()}

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'seed': self.seed,
            'method': self.method,
            'pca_dim': self.pca_dim,
            'degree': self.degree,
            'dict_size': self.dict_size,
            'accuracy': self.accuracy,
            'epochs': self.epochs,
            'wall_ms': self.wall_ms,
            'log': [entry.to_dict() for entry in self.log],
        }
        if self.error:
            result['error'] = self.error
        return result


@dataclass
class MethodSummary:
    """Mean and population standard deviation over successful seeds"""

    method: str
    accuracies: List[float]

    @property
    def count(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> Optional[float]:
        return float(np.mean(self.accuracies)) if self.accuracies else None

    @property
    def std(self) -> Optional[float]:
        return float(np.std(self.accuracies)) if self.accuracies else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'method': self.method,
            'count': self.count,
            'mean': self.mean,
            'std': self.std,
            'accuracies': list(self.accuracies),
        }


@dataclass
class ExperimentReport:
    """All seed results of one experiment plus the config echo"""

    config: Dict[str, Any]
    results: List[SeedResult] = field(default_factory=list)
    started_at: Optional[str] = None
    wall_ms: int = 0

    @property
    def partial(self) -> bool:
        return any(not r.ok for r in self.results)

    @property
    def errors(self) -> List[Dict[str, Any]]:
        return [
            {'seed': r.seed, 'method': r.method, 'error': r.error}
            for r in self.results if not r.ok
        ]

    def summaries(self) -> List[MethodSummary]:
        """Per-method summaries in first-appearance order."""
        order: List[str] = []
        for r in self.results:
            if r.method not in order:
                order.append(r.method)
        return [
            MethodSummary(
                method,
                [r.accuracy for r in self.results
                 if r.method == method and r.ok and r.accuracy is not None]
            )
            for method in order
        ]

    def summary(self, method: str) -> MethodSummary:
        for s in self.summaries():
            if s.method == method:
                return s
        return MethodSummary(method, [])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'started_at': self.started_at,
            'wall_ms': self.wall_ms,
            'partial': self.partial,
            'config': self.config,
            'summaries': [s.to_dict() for s in self.summaries()],
            'results': [r.to_dict() for r in self.results],
            'errors': self.errors,
        }
