"""Cross-entropy training of the phase layers by adjoint backpropagation.

The loss for one sample is -ln(p_label) with p the normalized region
energies. Because every map in the forward chain is either linear
(diffraction) or element-wise (modulation), the exact gradient with respect
to each phase comes from one forward pass plus one adjoint sweep:

* seed a sensitivity field on the detector, a_ij = dL/dE_{d(ij)} * u_out,ij
  inside digit d's region and 0 elsewhere (E depends on u quadratically);
* pull it back through the conjugate-transpose propagators;
* at each layer, dL/dphi_ij = 2 * Im(conj(v_ij) * a_ij) with v the field
  just after that layer's modulation, then continue backward with
  a * conj(t * exp(j*phi)).

The sweep costs the same as a forward pass, so one training step is about
two forward passes per sample regardless of parameter count. Correctness is
pinned by the finite-difference tests, not by trust in the algebra.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from .core import ComplexField
from .dataset import EncodeMode, MaskDataset, encode_batch
from .errors import EmptyDatasetError, GridMismatchError
from .network import MetaNetwork, PhaseLayer, forward_arrays
from .propagation import DEFAULT_SETTINGS, PropagationSettings, get_operator


class OptimizerKind(str, enum.Enum):
    SGD = "sgd"
    ADAM = "adam"


class Readout(str, enum.Enum):
    """How region energies become class probabilities inside the loss.

    ENERGY (default) divides by the total region energy, matching the
    energy-distribution-percentage readout. SOFTMAX is an ablation knob:
    softmax(E / temperature).
    """

    ENERGY = "energy"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class Hyperparams:
    """Everything the optimizer needs, bundled for the run manifest."""

    learning_rate: float = 0.01
    batch_size: int = 64
    max_epochs: int = 15
    optimizer: OptimizerKind = OptimizerKind.ADAM
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 42
    loss_epsilon: float = 1e-12
    early_stop_patience: int = 3
    readout: Readout = Readout.ENERGY
    softmax_temperature: float = 1.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not 0.0 < self.loss_epsilon <= 1e-6:
            raise ValueError(f"loss_epsilon must be in (0, 1e-6], got {self.loss_epsilon}")
        if self.early_stop_patience < 1:
            raise ValueError(f"early_stop_patience must be >= 1, got {self.early_stop_patience}")
        if not self.softmax_temperature > 0:
            raise ValueError(f"softmax_temperature must be > 0, got {self.softmax_temperature}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "optimizer": self.optimizer.value,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_epsilon": self.adam_epsilon,
            "seed": self.seed,
            "loss_epsilon": self.loss_epsilon,
            "early_stop_patience": self.early_stop_patience,
            "readout": self.readout.value,
            "softmax_temperature": self.softmax_temperature,
        }


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_accuracy: float
    test_accuracy: float | None = None


@dataclass
class TrainingRun:
    """Outcome of one train() call; network is the best-validation snapshot."""

    history: list
    network: MetaNetwork
    hyperparams: Hyperparams
    wall_time: float
    best_epoch: int


def loss(p: np.ndarray, label: int, loss_epsilon: float = 1e-12) -> float:
    """Cross-entropy -ln(max(p_label, loss_epsilon)) for one sample."""
    p = np.asarray(p, dtype=np.float64)
    if not 0 <= label <= 9:
        raise ValueError(f"label must be a digit 0..9, got {label}")
    return float(-np.log(max(float(p[label]), loss_epsilon)))


def random_phases_network(
    net_shape: MetaNetwork | None = None,
    *,
    config=None,
    detector=None,
    seed: int = 42,
) -> MetaNetwork:
    """Fresh network with phases i.i.d. uniform on [0, 2*pi) from the seed."""
    from .network import default_detector_layout

    if net_shape is not None:
        config, detector = net_shape.config, net_shape.detector
    if config is None:
        raise ValueError("need either net_shape or config")
    if detector is None:
        detector = default_detector_layout(config.grid_n)
    rng = np.random.default_rng(seed)
    layers = tuple(
        PhaseLayer(rng.uniform(0.0, 2.0 * np.pi, size=(config.grid_n, config.grid_n)))
        for _ in range(config.num_layers)
    )
    return MetaNetwork(config=config, layers=layers, detector=detector)


def _losses_and_seed(energies, labels, hp: Hyperparams):
    """Per-sample losses and dL/dE (rows of zero where the clamp is active)."""
    e = np.asarray(energies, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    batch = e.shape[0]
    rows = np.arange(batch)
    total = e.sum(axis=1)
    dlde = np.zeros_like(e)
    if hp.readout is Readout.ENERGY:
        p_label = np.zeros(batch)
        ok = total > 0.0
        p_label[ok] = e[rows[ok], labels[ok]] / total[ok]
        losses = -np.log(np.maximum(p_label, hp.loss_epsilon))
        live = p_label > hp.loss_epsilon
        dlde[live] = 1.0 / total[live, None]
        dlde[rows[live], labels[live]] -= 1.0 / e[rows[live], labels[live]]
    else:
        scaled = e / hp.softmax_temperature
        scaled -= scaled.max(axis=1, keepdims=True)
        q = np.exp(scaled)
        q /= q.sum(axis=1, keepdims=True)
        q_label = q[rows, labels]
        losses = -np.log(np.maximum(q_label, hp.loss_epsilon))
        live = q_label > hp.loss_epsilon
        dlde[live] = q[live]
        dlde[rows[live], labels[live]] -= 1.0
        dlde[live] /= hp.softmax_temperature
    return losses, dlde


def batch_loss_and_gradients(
    net: MetaNetwork,
    u0: np.ndarray,
    labels,
    hp: Hyperparams,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
):
    """Per-sample losses and per-layer phase gradients for a (B, n, n) batch.

    Returns (losses (B,), grads list of (B, n, n) real arrays). The same
    propagation settings drive the forward pass and the adjoint sweep;
    gradients of one discretization against fields of another are
    meaningless.
    """
    cfg = net.config
    trace = forward_arrays(net, u0, settings, workers)
    losses, dlde = _losses_and_seed(trace.region_energies, labels, hp)

    a = np.zeros_like(trace.u_out)
    size = net.detector.region_size
    for digit in range(10):
        r, c = net.detector.origins[net.detector.label_map[digit]]
        block = (slice(None),) * (a.ndim - 2) + (slice(r, r + size), slice(c, c + size))
        a[block] = dlde[..., digit, None, None] * trace.u_out[block]

    grads = [None] * net.num_layers
    a = get_operator(cfg, cfg.detector_gap, settings).apply_adjoint(a, workers)
    for l in range(net.num_layers - 1, -1, -1):
        grads[l] = 2.0 * np.imag(np.conj(trace.post_layer[l]) * a)
        if l > 0:
            a = a * np.conj(net.layers[l].modulation)
            a = get_operator(cfg, cfg.layer_gap, settings).apply_adjoint(a, workers)
    return losses, grads


def gradient(
    net: MetaNetwork,
    u0,
    label: int,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    loss_epsilon: float = 1e-12,
    workers: int | None = None,
):
    """Exact dloss/dphases for one input, one (n, n) real array per layer."""
    # ndarray.data is a memoryview, so duck-typing on "data" would misfire
    data = u0.data if isinstance(u0, ComplexField) else np.asarray(u0, dtype=np.complex128)
    hp = Hyperparams(loss_epsilon=loss_epsilon)
    _, grads = batch_loss_and_gradients(
        net, data[None], np.asarray([label]), hp, settings, workers
    )
    return [g[0] for g in grads]


class _Sgd:
    def __init__(self, hp: Hyperparams):
        self.lr = hp.learning_rate

    def step(self, params, grads):
        return [p - self.lr * g for p, g in zip(params, grads)]


class _Adam:
    def __init__(self, hp: Hyperparams):
        self.lr = hp.learning_rate
        self.b1, self.b2, self.eps = hp.beta1, hp.beta2, hp.adam_epsilon
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        out = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * g * g
            mhat = self.m[i] / (1.0 - self.b1**self.t)
            vhat = self.v[i] / (1.0 - self.b2**self.t)
            out.append(p - self.lr * mhat / (np.sqrt(vhat) + self.eps))
        return out


def _make_optimizer(hp: Hyperparams):
    return _Adam(hp) if hp.optimizer is OptimizerKind.ADAM else _Sgd(hp)


def dataset_region_energies(
    net: MetaNetwork,
    data: MaskDataset,
    encode_mode: EncodeMode = EncodeMode.BLOCKING,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
    chunk: int = 256,
) -> np.ndarray:
    """Region energies for every sample of a dataset, shape (N, 10)."""
    out = np.empty((len(data), 10), dtype=np.float64)
    for start in range(0, len(data), chunk):
        masks = data.masks[start : start + chunk]
        u0 = encode_batch(masks, encode_mode)
        out[start : start + len(masks)] = forward_arrays(
            net, u0, settings, workers
        ).region_energies
    return out


def predict_digits(
    net: MetaNetwork,
    data: MaskDataset,
    encode_mode: EncodeMode = EncodeMode.BLOCKING,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
    chunk: int = 256,
) -> np.ndarray:
    """Predicted digit per sample (argmax region energy, ties to low digit)."""
    return np.argmax(
        dataset_region_energies(net, data, encode_mode, settings, workers, chunk), axis=1
    )


def accuracy(
    net: MetaNetwork,
    data: MaskDataset,
    encode_mode: EncodeMode = EncodeMode.BLOCKING,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
) -> float:
    """Fraction of samples whose predicted digit equals the label."""
    if len(data) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    preds = predict_digits(net, data, encode_mode, settings, workers)
    return float(np.mean(preds == data.labels))


def train(
    train_set: MaskDataset,
    validation_set: MaskDataset,
    hp: Hyperparams,
    net_init: MetaNetwork,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    encode_mode: EncodeMode = EncodeMode.BLOCKING,
    workers: int | None = None,
    test_set: MaskDataset | None = None,
    log=None,
) -> TrainingRun:
    """Minibatch gradient descent over the phase parameters.

    One epoch is one shuffled pass (shuffle drawn from hp.seed); the batch
    gradient is the mean of per-sample gradients in fixed order, so runs are
    bit-reproducible. Training stops at max_epochs or once validation
    accuracy has not improved for early_stop_patience consecutive epochs,
    and the returned network is the best-validation snapshot, not the last
    iterate.

    ``log``, if given, is called with one formatted line per epoch.
    """
    if len(train_set) == 0 or len(validation_set) == 0:
        raise EmptyDatasetError("train and validation sets must be nonempty")
    if train_set.n != net_init.config.grid_n:
        raise GridMismatchError(
            f"dataset is {train_set.n}x{train_set.n}, "
            f"network grid is {net_init.config.grid_n}"
        )

    t0 = time.perf_counter()
    rng = np.random.default_rng(hp.seed)
    transmissions = [layer.transmission for layer in net_init.layers]
    params = [np.array(layer.phases) for layer in net_init.layers]
    optimizer = _make_optimizer(hp)

    def rebuild(ps):
        return net_init.with_layers(
            PhaseLayer(p, t) for p, t in zip(ps, transmissions)
        )

    net = net_init
    history = []
    best_params = [p.copy() for p in params]
    best_acc = -1.0
    best_epoch = 0
    stale = 0
    count = len(train_set)

    for epoch in range(1, hp.max_epochs + 1):
        order = rng.permutation(count)
        loss_total = 0.0
        for start in range(0, count, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            u0 = encode_batch(train_set.masks[idx], encode_mode)
            losses, grads = batch_loss_and_gradients(
                net, u0, train_set.labels[idx], hp, settings, workers
            )
            loss_total += float(losses.sum())
            params = optimizer.step(params, [g.mean(axis=0) for g in grads])
            net = rebuild(params)
        train_loss = loss_total / count
        val_acc = accuracy(net, validation_set, encode_mode, settings, workers)
        test_acc = (
            accuracy(net, test_set, encode_mode, settings, workers)
            if test_set is not None
            else None
        )
        history.append(EpochStats(epoch, train_loss, val_acc, test_acc))
        if log is not None:
            extra = "" if test_acc is None else f"  test_acc {test_acc:.4f}"
            log(
                f"epoch {epoch:3d}  train_loss {train_loss:.6f}  "
                f"val_acc {val_acc:.4f}{extra}"
            )
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best_params = [p.copy() for p in params]
            stale = 0
        else:
            stale += 1
            if stale >= hp.early_stop_patience:
                break

    return TrainingRun(
        history=history,
        network=rebuild(best_params),
        hyperparams=hp,
        wall_time=time.perf_counter() - t0,
        best_epoch=best_epoch,
    )


def history_csv(run: TrainingRun) -> str:
    """History as CSV text: epoch, train_loss, val_accuracy[, test_accuracy]."""
    from .core import float_repr17

    with_test = any(s.test_accuracy is not None for s in run.history)
    header = "epoch,train_loss,val_accuracy" + (",test_accuracy" if with_test else "")
    lines = [header]
    for s in run.history:
        row = f"{s.epoch},{float_repr17(s.train_loss)},{float_repr17(s.val_accuracy)}"
        if with_test:
            row += "," + ("" if s.test_accuracy is None else float_repr17(s.test_accuracy))
        lines.append(row)
    return "\n".join(lines) + "\n"
