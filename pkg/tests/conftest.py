"""
Pytest configuration and shared fixtures
"""

import gzip
import json
import logging
import os
import struct
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from koopman_distill.teacher import MlpArchitecture, init_mlp

IMAGE_SIDE = 4
NUM_CLASSES = 3


def idx_image_bytes(pixels: np.ndarray) -> bytes:
    """Serialize a (count, h, w) uint8 array as an IDX image file."""
    count, height, width = pixels.shape
    return struct.pack('>IIII', 0x803, count, height, width) + pixels.astype(np.uint8).tobytes()


def idx_label_bytes(labels: np.ndarray) -> bytes:
    """Serialize label indices as an IDX label file."""
    return struct.pack('>II', 0x801, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes()


def write_idx(path: Path, data: bytes, compress: bool = False) -> Path:
    path.write_bytes(gzip.compress(data) if compress else data)
    return path


def make_blob_images(count: int, seed: int) -> tuple:
    """
    Separable 4x4 images: class c lights up its own row band, plus noise.

    Returns:
        (pixels uint8 (count, 4, 4), labels int64)
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(count) % NUM_CLASSES
    rng.shuffle(labels)
    pixels = rng.integers(0, 60, size=(count, IMAGE_SIDE, IMAGE_SIDE))
    for i, label in enumerate(labels):
        pixels[i, label, :] += 180
    return pixels.astype(np.uint8), labels.astype(np.int64)


def parse_json_output(result) -> dict:
    """Decode the JSON envelope from a CliRunner result's stdout."""
    text = result.stdout
    start = text.index('{')
    return json.JSONDecoder().raw_decode(text[start:])[0]


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Run every test without KOOPMAN_DISTILL_* variables or stray .env files."""
    for name in list(os.environ):
        if name.startswith('KOOPMAN_DISTILL_'):
            monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv('XDG_CONFIG_HOME', str(tmp_path / 'xdg'))
    workdir = tmp_path / 'work'
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    yield
    package_logger = logging.getLogger('koopman_distill')
    package_logger.handlers.clear()
    package_logger.setLevel(logging.NOTSET)


@pytest.fixture
def cli_runner():
    """Provide a Click CLI test runner"""
    return CliRunner()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def synthetic_dataset(tmp_path):
    """Train/test IDX files (train gzipped) for a 3-class 4x4 toy problem"""
    data_dir = tmp_path / 'data'
    data_dir.mkdir()
    train_px, train_y = make_blob_images(120, seed=1)
    test_px, test_y = make_blob_images(45, seed=2)
    paths = {
        'train_images': write_idx(data_dir / 'train-images.idx3-ubyte.gz', idx_image_bytes(train_px), True),
        'train_labels': write_idx(data_dir / 'train-labels.idx1-ubyte.gz', idx_label_bytes(train_y), True),
        'test_images': write_idx(data_dir / 'test-images.idx3-ubyte', idx_image_bytes(test_px)),
        'test_labels': write_idx(data_dir / 'test-labels.idx1-ubyte', idx_label_bytes(test_y)),
    }
    return {
        'dir': data_dir,
        'paths': paths,
        'train_features': train_px.reshape(len(train_y), -1) / 255.0,
        'train_labels': train_y,
        'test_features': test_px.reshape(len(test_y), -1) / 255.0,
        'test_labels': test_y,
    }


@pytest.fixture
def small_config_dict(synthetic_dataset, tmp_path):
    """Experiment config sized for seconds-long runs"""
    paths = synthetic_dataset['paths']
    return {
        'dataset': {
            'name': 'blobs',
            'train_images': str(paths['train_images']),
            'train_labels': str(paths['train_labels']),
            'test_images': str(paths['test_images']),
            'test_labels': str(paths['test_labels']),
            'num_classes': NUM_CLASSES,
        },
        'teacher': {
            'source': 'train',
            'layer_sizes': [IMAGE_SIDE * IMAGE_SIDE, 5, 5, NUM_CLASSES],
            'epochs': 4,
            'batch_size': 16,
        },
        'student': {'pca_dim': 3, 'degree': 2},
        'distill': {'epochs': 4, 'batch_size': 16},
        'methods': ['naive', 'naive-pca', 'distill'],
        'seeds': [0, 1],
        'output': {'dir': str(tmp_path / 'reports')},
    }


@pytest.fixture
def small_config_file(small_config_dict, tmp_path):
    path = tmp_path / 'experiment.json'
    path.write_text(json.dumps(small_config_dict))
    return path


@pytest.fixture
def tiny_mlp():
    """[4, 3, 3, 2] network with non-zero biases"""
    mlp = init_mlp(MlpArchitecture((4, 3, 3, 2)), seed=7)
    rng = np.random.default_rng(3)
    for b in mlp.biases:
        b[:] = rng.normal(scale=0.1, size=b.shape)
    return mlp
