"""Subcommands of koopman-distill"""

from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from koopman_distill.dataset import load_split
from koopman_distill.error_handler import ConfigError
from koopman_distill.linalg import DenseMatrix
from koopman_distill.models.config import ExperimentConfig


def load_named_split(config: ExperimentConfig, split: str) -> Tuple[DenseMatrix, NDArray[np.int64]]:
    """Load the 'train' or 'test' split named in the config."""
    images: Optional[str] = getattr(config.dataset, f'{split}_images')
    labels: Optional[str] = getattr(config.dataset, f'{split}_labels')
    if not images or not labels:
        raise ConfigError(
            f"dataset.{split}_images and dataset.{split}_labels must be set",
            suggestion="Pass --config with a dataset section"
        )
    for path in (images, labels):
        if not Path(path).exists():
            raise ConfigError(f"Dataset file not found: {path}")
    return load_split(images, labels, config.dataset.num_classes)


def has_split(config: ExperimentConfig, split: str) -> bool:
    return bool(getattr(config.dataset, f'{split}_images') and getattr(config.dataset, f'{split}_labels'))
