"""
IDX dataset loading (MNIST, Fashion-MNIST) and seeded batching.

IDX layout (big-endian):
    u32 magic        0x00000803 images / 0x00000801 labels
    u32 dims[n]      3 for images (count, rows, cols), 1 for labels (count)
    u8  payload[]    row-major pixels or label bytes

Files may be gzip-wrapped; compression is detected from the 0x1f8b header.
"""

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

from koopman_distill.error_handler import (
    IdxDimensionError,
    IdxMagicError,
    IdxTruncatedError,
    LabelRangeError,
    ShapeError,
)
from koopman_distill.linalg import DenseMatrix

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
GZIP_MAGIC = b'\x1f\x8b'

# Largest payload accepted from a header (bytes); guards against absurd dims
MAX_PAYLOAD_BYTES = 1 << 34


@dataclass(frozen=True, eq=False)
class ImageSet:
    """Images parsed from an IDX file; pixels has shape (count, height, width)"""

    count: int
    height: int
    width: int
    pixels: NDArray[np.uint8]


@dataclass(frozen=True, eq=False)
class LabelSet:
    """Class indices parsed from an IDX file"""

    count: int
    labels: NDArray[np.int64]


@dataclass(frozen=True, eq=False)
class Batch:
    """One minibatch: features (B x D_in), label indices (B,), one-hot (B x C)"""

    features: DenseMatrix
    labels: NDArray[np.int64]
    onehot: DenseMatrix
    indices: NDArray[np.int64]

    @property
    def size(self) -> int:
        return int(self.labels.shape[0])


def _read_header(data: bytes, expected_magic: int, ndims: int, kind: str) -> Tuple[int, ...]:
    header_size = 4 + 4 * ndims
    if len(data) < header_size:
        raise IdxTruncatedError(
            f'IDX {kind} header truncated: {len(data)} of {header_size} bytes'
        )

    (magic,) = struct.unpack('>I', data[:4])
    if magic != expected_magic:
        raise IdxMagicError(
            f'unexpected magic for {kind}: 0x{magic:08x}',
            details=f'expected 0x{expected_magic:08x}'
        )

    return struct.unpack(f'>{ndims}I', data[4:header_size])


def _check_payload(data: bytes, offset: int, expected: int, kind: str) -> None:
    if expected > MAX_PAYLOAD_BYTES:
        raise IdxDimensionError(f'IDX {kind} dimensions overflow: {expected} payload bytes')
    available = len(data) - offset
    if available < expected:
        raise IdxTruncatedError(
            f'IDX {kind} payload truncated: {available} of {expected} bytes'
        )
    if available > expected:
        logger.debug(f"IDX {kind}: ignoring {available - expected} trailing bytes")


def parse_idx_images(data: bytes) -> ImageSet:
    """
    Parse an IDX image file.

    Args:
        data: Raw (decompressed) file bytes

    Returns:
        ImageSet with pixels copied bit-exactly

    Raises:
        IdxMagicError: If the magic is not 0x00000803
        IdxTruncatedError: If the header or payload is short
        IdxDimensionError: If the dimensions overflow the payload cap
    """
    count, height, width = _read_header(data, IMAGE_MAGIC, 3, 'images')
    expected = count * height * width
    _check_payload(data, 16, expected, 'images')

    pixels = np.frombuffer(data, dtype=np.uint8, count=expected, offset=16)
    return ImageSet(
        count=count,
        height=height,
        width=width,
        pixels=pixels.reshape(count, height, width).copy(),
    )


def parse_idx_labels(data: bytes, num_classes: Optional[int] = None) -> LabelSet:
    """
    Parse an IDX label file.

    Args:
        data: Raw (decompressed) file bytes
        num_classes: If given, every label must be below it

    Returns:
        LabelSet

    Raises:
        IdxMagicError: If the magic is not 0x00000801
        IdxTruncatedError: If the header or payload is short
        LabelRangeError: If num_classes is given and a label exceeds it
    """
    (count,) = _read_header(data, LABEL_MAGIC, 1, 'labels')
    _check_payload(data, 8, count, 'labels')

    labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=8).astype(np.int64)
    if num_classes is not None:
        check_labels(labels, num_classes)
    return LabelSet(count=count, labels=labels)


def _read_maybe_gzip(path: Union[str, Path]) -> bytes:
    raw = Path(path).expanduser().read_bytes()
    if raw[:2] == GZIP_MAGIC:
        logger.debug(f"Decompressing gzip IDX file {path}")
        return gzip.decompress(raw)
    return raw


def load_idx_images(path: Union[str, Path]) -> ImageSet:
    """Read and parse an IDX image file, transparently handling gzip."""
    return parse_idx_images(_read_maybe_gzip(path))


def load_idx_labels(path: Union[str, Path], num_classes: Optional[int] = None) -> LabelSet:
    """Read and parse an IDX label file, transparently handling gzip."""
    return parse_idx_labels(_read_maybe_gzip(path), num_classes)


def to_features(images: ImageSet) -> DenseMatrix:
    """
    Flatten images to a count x (H*W) float64 matrix scaled by 1/255.

    Raises:
        ShapeError: If the set is empty
    """
    if images.count == 0:
        raise ShapeError('Cannot build features from an empty image set')
    flat = images.pixels.reshape(images.count, images.height * images.width)
    return flat.astype(np.float64) / 255.0


def check_labels(labels: NDArray[np.int64], num_classes: int) -> None:
    """Raise LabelRangeError for the first label outside [0, num_classes)."""
    if labels.size == 0:
        return
    bad = (labels < 0) | (labels >= num_classes)
    if bad.any():
        raise LabelRangeError(int(labels[np.argmax(bad)]), num_classes)


def one_hot(labels: Union[LabelSet, NDArray[np.int64]], num_classes: int) -> DenseMatrix:
    """
    Encode labels as a count x C one-hot matrix.

    Raises:
        LabelRangeError: If any label is outside 0..C-1
    """
    indices = labels.labels if isinstance(labels, LabelSet) else np.asarray(labels, dtype=np.int64)
    check_labels(indices, num_classes)
    encoded = np.zeros((indices.shape[0], num_classes), dtype=np.float64)
    encoded[np.arange(indices.shape[0]), indices] = 1.0
    return encoded


def epoch_seed(seed: int, epoch: int) -> int:
    """Derive the shuffle seed for one epoch from the run seed."""
    return int(np.random.SeedSequence([seed, epoch]).generate_state(1, dtype=np.uint64)[0])


def shuffled_batches(
    features: DenseMatrix,
    labels: NDArray[np.int64],
    batch_size: int,
    seed: int,
    num_classes: int = 10,
) -> Iterator[Batch]:
    """
    Yield one epoch of minibatches in a seeded random order.

    The permutation comes from numpy's PCG64 generator, so identical seeds
    give identical orders on every platform. The last batch may be short.

    Args:
        features: N x D_in matrix
        labels: N label indices
        batch_size: Batch size (>= 1)
        seed: Shuffle seed
        num_classes: Width of the one-hot matrices

    Yields:
        Batch objects covering every index exactly once

    Raises:
        ValueError: If batch_size < 1
        ShapeError: If features and labels disagree in length
    """
    if batch_size < 1:
        raise ValueError(f'batch_size must be >= 1, got {batch_size}')
    n = features.shape[0]
    if labels.shape[0] != n:
        raise ShapeError(f'{n} feature rows but {labels.shape[0]} labels')

    order = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        batch_labels = labels[idx]
        yield Batch(
            features=features[idx],
            labels=batch_labels,
            onehot=one_hot(batch_labels, num_classes),
            indices=idx,
        )


def load_split(
    images_path: Union[str, Path],
    labels_path: Union[str, Path],
    num_classes: int = 10,
) -> Tuple[DenseMatrix, NDArray[np.int64]]:
    """
    Load one dataset split as (features, labels).

    Raises:
        ShapeError: If image and label counts disagree
    """
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path, num_classes)
    if images.count != labels.count:
        raise ShapeError(
            f'{images_path} has {images.count} images but {labels_path} has {labels.count} labels'
        )
    logger.info(f"Loaded {images.count} samples of {images.height}x{images.width} from {images_path}")
    return to_features(images), labels.labels
