"""MNIST ingestion, binarization, and object-plane field encoding.

Images travel the pipeline as arrays: uint8 (N, 28, 28) grayscale from the
IDX files, boolean masks after binarization, complex object-plane fields
after encoding. The mask convention is 1 = digit material (a rigid plate
cell), 0 = open air.

IDX parsing is bit-exact: parse -> serialize reproduces the input bytes, and
gzipped files (magic 0x1f 0x8b) are accepted transparently.
"""

from __future__ import annotations

import enum
import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

from .core import ComplexField, normalize
from .errors import (
    BadMagicError,
    CountMismatchError,
    EmptyDatasetError,
    FileFormatError,
    TruncatedFileError,
    ZeroFieldError,
)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
IMAGE_SIDE = 28


class EncodeMode(str, enum.Enum):
    """How a binary digit mask becomes an object-plane field.

    BLOCKING: the plate blocks, the surroundings pass the incident plane
    wave, u = 1 - mask. APERTURE: the complement, u = mask.
    """

    BLOCKING = "blocking"
    APERTURE = "aperture"


@dataclass(frozen=True, eq=False)
class MaskDataset:
    """Immutable stack of binary masks with digit labels."""

    masks: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        masks = np.array(self.masks, dtype=bool)
        labels = np.array(self.labels, dtype=np.int64)
        if masks.ndim != 3 or masks.shape[1] != masks.shape[2]:
            raise ValueError(f"masks must be (N, n, n), got {masks.shape}")
        if labels.shape != (masks.shape[0],):
            raise ValueError(
                f"labels shape {labels.shape} does not match {masks.shape[0]} masks"
            )
        if labels.size and (labels.min() < 0 or labels.max() > 9):
            raise ValueError("labels must be digits 0..9")
        masks.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.masks.shape[0]

    @property
    def n(self) -> int:
        return self.masks.shape[1]

    def subset(self, index) -> "MaskDataset":
        return MaskDataset(self.masks[index], self.labels[index])


@dataclass(frozen=True)
class DatasetSplit:
    train: MaskDataset
    validation: MaskDataset
    test: MaskDataset


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        head = fh.read(2)
        rest = fh.read()
    blob = head + rest
    if head == b"\x1f\x8b":
        return gzip.decompress(blob)
    return blob


def parse_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a uint8 (N, 28, 28) array."""
    blob = _read_bytes(path)
    if len(blob) < 16:
        raise TruncatedFileError(f"{path}: IDX image header needs 16 bytes, got {len(blob)}")
    magic, count, rows, cols = struct.unpack(">IIII", blob[:16])
    if magic != IMAGES_MAGIC:
        raise BadMagicError(
            f"{path}: expected image magic 0x{IMAGES_MAGIC:08x}, got 0x{magic:08x}"
        )
    if (rows, cols) != (IMAGE_SIDE, IMAGE_SIDE):
        raise FileFormatError(f"{path}: expected 28x28 images, got {rows}x{cols}")
    expected = 16 + count * rows * cols
    if len(blob) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, got {len(blob)}")
    if len(blob) > expected:
        raise FileFormatError(f"{path}: {len(blob) - expected} trailing bytes after image data")
    return np.frombuffer(blob, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def parse_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a uint8 (N,) array."""
    blob = _read_bytes(path)
    if len(blob) < 8:
        raise TruncatedFileError(f"{path}: IDX label header needs 8 bytes, got {len(blob)}")
    magic, count = struct.unpack(">II", blob[:8])
    if magic != LABELS_MAGIC:
        raise BadMagicError(
            f"{path}: expected label magic 0x{LABELS_MAGIC:08x}, got 0x{magic:08x}"
        )
    expected = 8 + count
    if len(blob) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, got {len(blob)}")
    if len(blob) > expected:
        raise FileFormatError(f"{path}: {len(blob) - expected} trailing bytes after label data")
    labels = np.frombuffer(blob, dtype=np.uint8, offset=8)
    if labels.size and labels.max() > 9:
        raise FileFormatError(f"{path}: label {labels.max()} out of digit range")
    return labels


def parse_idx(images_path, labels_path):
    """Parse a matched IDX image/label pair.

    Returns (images uint8 (N, 28, 28), labels uint8 (N,)).

    Raises
    ------
    CountMismatchError
        If the two files disagree on the sample count.
    """
    images = parse_idx_images(images_path)
    labels = parse_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{images.shape[0]} images but {labels.shape[0]} labels "
            f"({images_path} vs {labels_path})"
        )
    return images, labels


def serialize_idx_images(images: np.ndarray) -> bytes:
    """Inverse of :func:`parse_idx_images`; parse -> serialize is byte-exact."""
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    return struct.pack(">IIII", IMAGES_MAGIC, count, rows, cols) + images.tobytes()


def serialize_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8)
    return struct.pack(">II", LABELS_MAGIC, labels.shape[0]) + labels.tobytes()


def binarize(images: np.ndarray) -> np.ndarray:
    """Grayscale to binary by ceiling: any nonzero pixel becomes material.

    Accepts one image or a stack; returns bool array of the same shape.
    """
    return np.asarray(images) > 0


def encode_batch(masks: np.ndarray, mode: EncodeMode = EncodeMode.BLOCKING) -> np.ndarray:
    """Encode a (..., n, n) mask stack into unit-energy object fields.

    BLOCKING gives u = 1 - mask (plate blocks the plane wave), APERTURE
    u = mask. Every sample is normalized to unit energy.

    Raises
    ------
    ZeroFieldError
        If any sample encodes to an identically zero field.
    """
    masks = np.asarray(masks, dtype=bool)
    if mode is EncodeMode.BLOCKING:
        u = 1.0 - masks.astype(np.float64)
    else:
        u = masks.astype(np.float64)
    e = np.sum(u * u, axis=(-2, -1))
    if np.any(e == 0.0):
        raise ZeroFieldError(f"mask encodes to a zero field under mode {mode.value}")
    return (u / np.sqrt(e)[..., None, None]).astype(np.complex128)


def encode_object(mask: np.ndarray, mode: EncodeMode = EncodeMode.BLOCKING) -> ComplexField:
    """Encode one binary mask as a normalized object-plane field."""
    mask = np.asarray(mask, dtype=bool)
    if mode is EncodeMode.BLOCKING:
        u = 1.0 - mask.astype(np.float64)
    else:
        u = mask.astype(np.float64)
    return normalize(ComplexField(u, plane_tag="object"))


_TRAIN_IMAGES = "train-images-idx3-ubyte"
_TRAIN_LABELS = "train-labels-idx1-ubyte"
_TEST_IMAGES = "t10k-images-idx3-ubyte"
_TEST_LABELS = "t10k-labels-idx1-ubyte"


def _find(mnist_dir, stem: str) -> str:
    for name in (stem, stem + ".gz"):
        path = os.path.join(mnist_dir, name)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"{mnist_dir}: no {stem} or {stem}.gz")


def load_split(mnist_dir) -> DatasetSplit:
    """Load the standard-named MNIST files and split deterministically.

    The train file is split by index order: validation takes the final
    total // 12 images (5000 of the canonical 60000), training the rest. No
    randomness is involved, so the split is a fixed function of file order.
    """
    train_images, train_labels = parse_idx(
        _find(mnist_dir, _TRAIN_IMAGES), _find(mnist_dir, _TRAIN_LABELS)
    )
    test_images, test_labels = parse_idx(
        _find(mnist_dir, _TEST_IMAGES), _find(mnist_dir, _TEST_LABELS)
    )
    total = train_images.shape[0]
    if total < 2:
        raise EmptyDatasetError(f"{mnist_dir}: need at least 2 training images, got {total}")
    val = max(1, total // 12)
    cut = total - val
    return DatasetSplit(
        train=MaskDataset(binarize(train_images[:cut]), train_labels[:cut]),
        validation=MaskDataset(binarize(train_images[cut:]), train_labels[cut:]),
        test=MaskDataset(binarize(test_images), test_labels),
    )
