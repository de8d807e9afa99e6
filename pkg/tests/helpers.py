"""Synthetic data builders shared across test modules.

The shape set is a 10-class stand-in for handwritten digits: each class is a
rectangular plate at a class-specific position with small random jitter, so
a working classifier separates it quickly while a broken gradient cannot.
"""

import gzip
import os

import numpy as np

from metanet.dataset import MaskDataset, serialize_idx_images, serialize_idx_labels


def shapes_images(count: int, seed: int) -> tuple:
    """uint8 (count, 28, 28) images and labels, one plate per class."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, count).astype(np.uint8)
    images = np.zeros((count, 28, 28), np.uint8)
    for i, lab in enumerate(labels):
        rr, cc = divmod(int(lab), 5)
        img = np.zeros((28, 28), np.uint8)
        img[3 + rr * 11 : 11 + rr * 11, 2 + cc * 5 : 8 + cc * 5] = 255
        shift = (int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))
        images[i] = np.roll(img, shift, axis=(0, 1))
    return images, labels


def shapes_dataset(count: int, seed: int) -> MaskDataset:
    images, labels = shapes_images(count, seed)
    return MaskDataset(images > 0, labels)


def write_idx_dir(path, train_count: int = 240, test_count: int = 60,
                  seed: int = 1, gzip_test: bool = False) -> str:
    """Standard-named IDX files filled with the synthetic shape set."""
    os.makedirs(path, exist_ok=True)
    ti, tl = shapes_images(train_count, seed)
    vi, vl = shapes_images(test_count, seed + 1)
    pairs = [
        ("train-images-idx3-ubyte", serialize_idx_images(ti)),
        ("train-labels-idx1-ubyte", serialize_idx_labels(tl)),
        ("t10k-images-idx3-ubyte", serialize_idx_images(vi)),
        ("t10k-labels-idx1-ubyte", serialize_idx_labels(vl)),
    ]
    for name, blob in pairs:
        if gzip_test and name.startswith("t10k"):
            with gzip.open(os.path.join(path, name + ".gz"), "wb") as fh:
                fh.write(blob)
        else:
            with open(os.path.join(path, name), "wb") as fh:
                fh.write(blob)
    return str(path)


def digits_dataset() -> MaskDataset:
    """sklearn's 8x8 handwritten digits, thresholded and upscaled to 28x28."""
    from sklearn.datasets import load_digits

    digits = load_digits()
    masks8 = digits.images > 7.5
    big = np.kron(masks8, np.ones((3, 3), dtype=bool))
    masks = np.pad(big, ((0, 0), (2, 2), (2, 2)))
    return MaskDataset(masks, digits.target)


def random_field(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


TEN_CELLS = ((0, 0), (0, 2), (0, 4), (0, 6), (3, 0), (3, 2), (3, 4), (3, 6), (6, 0), (6, 2))


def fitted_layout(n: int):
    """A detector layout that fits grids the default 2x5 of 4x4 cannot."""
    from metanet.network import DetectorLayout, default_detector_layout

    if n >= 26:
        return default_detector_layout(n)
    if n >= 16:
        return default_detector_layout(n, region_size=2)
    return DetectorLayout(grid_n=n, region_size=1, origins=TEN_CELLS)


def small_net(n: int = 16, num_layers: int = 2, seed: int = 0):
    from metanet import PhysicsConfig
    from metanet.training import random_phases_network

    cfg = PhysicsConfig(grid_n=n, num_layers=num_layers)
    return random_phases_network(config=cfg, detector=fitted_layout(n), seed=seed)
