#!/usr/bin/env python3
"""Download the four MNIST IDX files into data/mnist/.

The canonical host throttles and occasionally 403s, so a few mirrors are
tried in order. Files are kept gzipped on disk (the loader reads .gz
transparently) and each download is parsed once as a sanity check before the
script reports success.

Usage:
    python3 scripts/fetch_mnist.py [--dest data/mnist]
"""

import argparse
import os
import sys
import urllib.error
import urllib.request

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from metanet.dataset import load_split

MIRRORS = [
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "http://yann.lecun.com/exdb/mnist/",
]

FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]


def fetch(name: str, dest: str) -> None:
    target = os.path.join(dest, name)
    if os.path.exists(target):
        print(f"{name}: already present")
        return
    last_error = None
    for mirror in MIRRORS:
        url = mirror + name
        try:
            print(f"{name}: fetching {url}")
            with urllib.request.urlopen(url, timeout=60) as response:
                blob = response.read()
            with open(target, "wb") as fh:
                fh.write(blob)
            return
        except (urllib.error.URLError, OSError) as exc:
            last_error = exc
            print(f"  failed: {exc}")
    raise SystemExit(f"could not fetch {name} from any mirror ({last_error})")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--dest", default=os.path.join("data", "mnist"))
    args = parser.parse_args()

    os.makedirs(args.dest, exist_ok=True)
    for name in FILES:
        fetch(name, args.dest)

    split = load_split(args.dest)
    print(
        f"ok: {len(split.train)} train / {len(split.validation)} validation / "
        f"{len(split.test)} test images in {args.dest}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
