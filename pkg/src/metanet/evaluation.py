"""Test-set evaluation, layer-count sweeps, and figure-backing artifacts.

The two 10 x 10 summaries mirror the standard diagnostics for this kind of
classifier: a confusion matrix of counts (rows = true digit, columns =
predicted) and an energy matrix whose row d holds the mean fraction of
detected energy per region over all test samples of digit d. Row d of the
energy matrix sums to 1 because each sample's region probabilities do.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .core import ComplexField, float_repr17, write_field
from .dataset import EncodeMode, MaskDataset
from .errors import EmptyDatasetError
from .network import MetaNetwork, region_probabilities
from .propagation import DEFAULT_SETTINGS, PropagationSettings
from .training import (
    Hyperparams,
    dataset_region_energies,
    random_phases_network,
    train,
)


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray
    energy_matrix: np.ndarray

    def __post_init__(self):
        self.confusion = np.asarray(self.confusion, dtype=np.int64)
        self.energy_matrix = np.asarray(self.energy_matrix, dtype=np.float64)


def evaluate(
    net: MetaNetwork,
    data: MaskDataset,
    encode_mode: EncodeMode = EncodeMode.BLOCKING,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
) -> EvalResult:
    """Classify every sample and aggregate accuracy, confusion, mean energies.

    Deterministic and order-independent: per-sample quantities are computed
    independently and reduced in dataset order.
    """
    if len(data) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    energies = dataset_region_energies(net, data, encode_mode, settings, workers)
    probs = region_probabilities(energies)
    preds = np.argmax(energies, axis=1)
    labels = data.labels

    confusion = np.zeros((10, 10), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)

    energy_matrix = np.zeros((10, 10), dtype=np.float64)
    for d in range(10):
        sel = labels == d
        if np.any(sel):
            energy_matrix[d] = probs[sel].mean(axis=0)

    accuracy = float(np.trace(confusion)) / float(confusion.sum())
    return EvalResult(accuracy, confusion, energy_matrix)


@dataclass
class SweepRow:
    layer_count: int
    accuracy: float
    epochs: int
    seed: int


def sweep_layers(
    layer_counts,
    train_set: MaskDataset,
    validation_set: MaskDataset,
    test_set: MaskDataset,
    hp: Hyperparams,
    base_net: MetaNetwork,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    encode_mode: EncodeMode = EncodeMode.BLOCKING,
    workers: int | None = None,
    log=None,
) -> list:
    """Train one network per layer count under one fixed budget and seed.

    Everything except num_layers is held identical across counts, so the
    rows are comparable; each row reports test accuracy and the epochs the
    run actually consumed (early stopping counts).
    """
    counts = list(layer_counts)
    if not counts:
        raise ValueError("need at least one layer count")
    rows = []
    for count in counts:
        config = replace(base_net.config, num_layers=int(count))
        net0 = random_phases_network(
            config=config, detector=base_net.detector, seed=hp.seed
        )
        run = train(
            train_set, validation_set, hp, net0,
            settings=settings, encode_mode=encode_mode, workers=workers,
        )
        result = evaluate(run.network, test_set, encode_mode, settings, workers)
        rows.append(SweepRow(int(count), result.accuracy, len(run.history), hp.seed))
        if log is not None:
            log(
                f"layers {count:2d}  test_acc {result.accuracy:.4f}  "
                f"epochs {len(run.history)}"
            )
    return rows


def confusion_csv(confusion: np.ndarray) -> str:
    """10 rows x 10 integer columns, row = true digit."""
    return "\n".join(",".join(str(int(v)) for v in row) for row in confusion) + "\n"


def energy_csv(matrix: np.ndarray) -> str:
    """10 x 10 mean energy fractions at 6 decimals."""
    return "\n".join(",".join(f"{v:.6f}" for v in row) for row in matrix) + "\n"


def sweep_csv(rows) -> str:
    lines = ["layer_count,accuracy,epochs,seed"]
    for r in rows:
        lines.append(f"{r.layer_count},{float_repr17(r.accuracy)},{r.epochs},{r.seed}")
    return "\n".join(lines) + "\n"


def dump_field(field: ComplexField, path) -> None:
    """Binary field dump (see core.write_field); round-trips bit-exactly."""
    write_field(field, path)


def render_heatmap(values, path) -> str:
    """Save a PNG heatmap plus a CSV twin holding the plotted values.

    ``values`` is a ComplexField (plotted as |u|^2) or a 2D real array,
    rendered one pixel per cell under the fixed viridis colormap. Returns
    the CSV twin's path.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if isinstance(values, ComplexField):
        grid = np.abs(values.data) ** 2
    else:
        grid = np.asarray(values, dtype=np.float64)
    if grid.ndim != 2:
        raise ValueError(f"heatmap needs a 2D array, got shape {grid.shape}")
    plt.imsave(path, grid, cmap="viridis")
    csv_path = os.path.splitext(str(path))[0] + ".csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        for row in grid:
            fh.write(",".join(float_repr17(v) for v in row) + "\n")
    return csv_path


def pick_correct_samples(
    net: MetaNetwork,
    data: MaskDataset,
    per_digit: int = 2,
    encode_mode: EncodeMode = EncodeMode.BLOCKING,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
) -> list:
    """Indices of the first correctly classified samples, per_digit per digit.

    The showcase filter: deterministic (dataset order), digits ascending.
    Digits that never classify correctly contribute fewer indices.
    """
    energies = dataset_region_energies(net, data, encode_mode, settings, workers)
    preds = np.argmax(energies, axis=1)
    out = []
    for d in range(10):
        hits = np.nonzero((data.labels == d) & (preds == d))[0]
        out.extend(int(i) for i in hits[:per_digit])
    return out
