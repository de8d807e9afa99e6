#!/usr/bin/env python3
"""Full-budget training run: the headline test accuracy plus its artifacts.

Trains the default 2-layer 28x28 network on the 55000/5000 MNIST split with
the stock hyperparameters, evaluates on the 10000-image test set, and writes
model, history, confusion matrix, energy matrix, and a run manifest under
--out. Expect tens of minutes on a laptop-class machine.

Usage:
    python3 scripts/fetch_mnist.py
    python3 scripts/reproduce_headline.py [--mnist-dir data/mnist] [--out runs/headline]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from metanet.cli import run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--mnist-dir", default=os.path.join("data", "mnist"))
    parser.add_argument("--out", default=os.path.join("runs", "headline"))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    common = ["--mnist-dir", args.mnist_dir, "--seed", str(args.seed)]
    if args.threads is not None:
        common += ["--threads", str(args.threads)]

    rc = run(["train", "--out", args.out] + common)
    if rc != 0:
        return rc
    model = os.path.join(args.out, "model.json")
    rc = run(["eval", "--model", model, "--out", os.path.join(args.out, "eval")] + common)
    if rc != 0:
        return rc
    return run([
        "dump-field", "--model", model, "--image-index", "0",
        "--out", os.path.join(args.out, "fields"),
    ] + common)


if __name__ == "__main__":
    sys.exit(main())
