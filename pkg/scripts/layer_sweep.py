#!/usr/bin/env python3
"""Accuracy vs layer count under one fixed training budget.

Trains one fresh network per layer count in 1..N on an MNIST subset and
writes sweep.csv plus a line plot. The interesting shape: a large 1 -> 2
jump, then strongly diminishing returns.

Usage:
    python3 scripts/layer_sweep.py [--mnist-dir data/mnist] [--layers 4]
        [--train-count 10000] [--epochs 5] [--out runs/layer_sweep]
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from metanet.core import PhysicsConfig
from metanet.dataset import load_split
from metanet.evaluation import sweep_csv, sweep_layers
from metanet.training import Hyperparams, random_phases_network


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--mnist-dir", default=os.path.join("data", "mnist"))
    parser.add_argument("--layers", type=int, default=4)
    parser.add_argument("--train-count", type=int, default=10000)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", default=os.path.join("runs", "layer_sweep"))
    args = parser.parse_args()

    split = load_split(args.mnist_dir)
    train_set = split.train.subset(np.arange(min(args.train_count, len(split.train))))
    hp = Hyperparams(max_epochs=args.epochs, early_stop_patience=args.epochs, seed=args.seed)
    base = random_phases_network(config=PhysicsConfig(), seed=args.seed)

    rows = sweep_layers(
        range(1, args.layers + 1), train_set, split.validation, split.test,
        hp, base, log=print,
    )

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(sweep_csv(rows))
    print(f"wrote {csv_path}")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    counts = [r.layer_count for r in rows]
    accs = [r.accuracy for r in rows]
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(counts, accs, marker="o")
    ax.set_xlabel("layers")
    ax.set_ylabel("test accuracy")
    ax.set_xticks(counts)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    png_path = os.path.join(args.out, "sweep.png")
    fig.savefig(png_path, dpi=150)
    print(f"wrote {png_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
