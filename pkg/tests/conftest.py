import os

import numpy as np
import pytest

from metanet import PhysicsConfig

MNIST_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)


def _find_mnist_dir():
    candidates = []
    env = os.environ.get("METANET_MNIST_DIR")
    if env:
        candidates.append(env)
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates += [os.path.join(here, "data", "mnist"), os.path.join(here, "data")]
    for cand in candidates:
        if all(
            os.path.exists(os.path.join(cand, f)) or os.path.exists(os.path.join(cand, f + ".gz"))
            for f in MNIST_FILES
        ):
            return cand
    return None


@pytest.fixture(scope="session")
def mnist_dir():
    found = _find_mnist_dir()
    if found is None:
        pytest.skip(
            "MNIST IDX files not found: place them in data/mnist/ or set "
            "METANET_MNIST_DIR (scripts/fetch_mnist.py downloads them)"
        )
    return found


@pytest.fixture(scope="session")
def full_scale():
    if not os.environ.get("METANET_FULL"):
        pytest.skip("full-scale training run: set METANET_FULL=1 to enable")
    return True


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config():
    return PhysicsConfig()


@pytest.fixture
def config12():
    return PhysicsConfig(grid_n=12)
