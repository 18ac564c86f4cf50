"""
Shared fixtures for CLI contract tests
"""

import pytest

from koopman_distill.teacher import MlpArchitecture, export_logits, init_mlp, save_teacher


@pytest.fixture
def teacher_file(tmp_path):
    """Untrained [16, 5, 5, 3] teacher saved as a model file"""
    return save_teacher(init_mlp(MlpArchitecture((16, 5, 5, 3)), seed=0), tmp_path / 'teacher.json')


@pytest.fixture
def train_logits_file(tmp_path, synthetic_dataset):
    """Logits of an untrained teacher for the synthetic training split"""
    mlp = init_mlp(MlpArchitecture((16, 5, 5, 3)), seed=1)
    path = tmp_path / 'train-logits.json'
    export_logits(mlp, synthetic_dataset['train_features'], path, provenance='external net')
    return path
