"""Layered phase-modulation network and its energy readout.

The forward model alternates element-wise phase modulation with free-space
diffraction:

    object plane --G--> [ layer 1 ] --G--> [ layer 2 ] --G--> detector

Each layer multiplies the incident field by t * exp(j*phi_ij); every cell of
one plane couples to every cell of the next through diffraction, which is
what makes the stack a fully connected network with the phases as weights.
Classification reads the detector plane through ten square regions, one per
digit, and picks the digit whose region captured the most energy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .core import ComplexField, PhysicsConfig, dumps_stable, energy
from .errors import (
    AllZeroRegionsError,
    GridMismatchError,
    LayoutOverflowError,
    ModelFormatError,
    ZeroFieldError,
)
from .propagation import DEFAULT_SETTINGS, PropagationSettings, get_operator

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class PhaseLayer:
    """One trainable layer: an n x n grid of phase shifts and a fixed gain.

    Phases are kept unwrapped while optimizing (exp(j*phi) is periodic, so
    the model is indifferent); wrap only at reporting and export boundaries.
    """

    phases: np.ndarray
    transmission: float = 1.0

    def __post_init__(self):
        arr = np.array(self.phases, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"phases must be a square 2D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("phases contain non-finite entries")
        if not self.transmission > 0:
            raise ValueError(f"transmission must be positive, got {self.transmission}")
        arr.flags.writeable = False
        object.__setattr__(self, "phases", arr)

    @property
    def n(self) -> int:
        return self.phases.shape[0]

    @property
    def modulation(self) -> np.ndarray:
        """Complex multiplier t * exp(j*phi), shape (n, n)."""
        return self.transmission * np.exp(1j * self.phases)

    def wrapped(self) -> np.ndarray:
        """Phases folded into [0, 2*pi)."""
        return np.mod(self.phases, 2.0 * np.pi)

    def with_phases(self, phases: np.ndarray) -> "PhaseLayer":
        return PhaseLayer(phases, self.transmission)


@dataclass(frozen=True)
class DetectorLayout:
    """Ten identical square readout regions on the detector grid.

    ``origins[k]`` is the (row, col) top-left cell of region k and
    ``label_map[d]`` names the region assigned to digit d. Regions must be
    pairwise disjoint and lie fully inside the grid.
    """

    grid_n: int
    region_size: int
    origins: tuple
    label_map: tuple = tuple(range(10))

    def __post_init__(self):
        origins = tuple((int(r), int(c)) for r, c in self.origins)
        label_map = tuple(int(x) for x in self.label_map)
        object.__setattr__(self, "origins", origins)
        object.__setattr__(self, "label_map", label_map)
        if self.region_size < 1:
            raise LayoutOverflowError(f"region_size must be >= 1, got {self.region_size}")
        if len(origins) != 10:
            raise LayoutOverflowError(f"need 10 regions, got {len(origins)}")
        if sorted(label_map) != list(range(10)):
            raise LayoutOverflowError(f"label_map must be a permutation of 0..9, got {label_map}")
        cover = np.zeros((self.grid_n, self.grid_n), dtype=np.int32)
        s = self.region_size
        for r, c in origins:
            if r < 0 or c < 0 or r + s > self.grid_n or c + s > self.grid_n:
                raise LayoutOverflowError(
                    f"region at ({r},{c}) size {s} leaves the {self.grid_n}x{self.grid_n} grid"
                )
            cover[r : r + s, c : c + s] += 1
        if cover.max() > 1:
            raise LayoutOverflowError("detector regions overlap")

    def region_energies(self, u_out: np.ndarray) -> np.ndarray:
        """Energy |u|^2 summed per region, indexed by digit.

        Accepts stacks (..., n, n) and returns (..., 10);
        entry d is the energy inside the region assigned to digit d.
        """
        inten = np.abs(np.asarray(u_out)) ** 2
        out = np.empty(inten.shape[:-2] + (10,), dtype=np.float64)
        s = self.region_size
        for digit in range(10):
            r, c = self.origins[self.label_map[digit]]
            out[..., digit] = inten[..., r : r + s, c : c + s].sum(axis=(-2, -1))
        return out

    def region_mask(self) -> np.ndarray:
        """Integer map: -1 outside every region, digit d inside digit d's region."""
        mask = np.full((self.grid_n, self.grid_n), -1, dtype=np.int32)
        s = self.region_size
        for digit in range(10):
            r, c = self.origins[self.label_map[digit]]
            mask[r : r + s, c : c + s] = digit
        return mask

    def to_dict(self) -> dict:
        return {
            "grid_n": self.grid_n,
            "region_size": self.region_size,
            "origins": [list(o) for o in self.origins],
            "label_map": list(self.label_map),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "DetectorLayout":
        try:
            return cls(
                grid_n=raw["grid_n"],
                region_size=raw["region_size"],
                origins=tuple(tuple(o) for o in raw["origins"]),
                label_map=tuple(raw["label_map"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"bad detector layout: {exc}") from exc


def _axis_starts(n: int, count: int, size: int) -> list:
    """Centered, evenly spaced start offsets of `count` blocks along one axis."""
    gap = (n - count * size) // (count + 1)
    if gap < 1:
        raise LayoutOverflowError(
            f"{count} regions of {size} cells do not fit in {n} cells with 1-cell gaps"
        )
    block = count * size + (count - 1) * gap
    first = (n - block) // 2
    return [first + i * (size + gap) for i in range(count)]


def default_detector_layout(
    n: int = 28, region_size: int = 4, rows: int = 2, cols: int = 5
) -> DetectorLayout:
    """Evenly spaced rows x cols grid of square regions, centered.

    Default: 2 x 5 array of 4 x 4 regions; digits 0-4 fill the top row left
    to right, 5-9 the bottom row.
    """
    if rows * cols != 10:
        raise LayoutOverflowError(f"need rows*cols == 10 regions, got {rows}x{cols}")
    row_starts = _axis_starts(n, rows, region_size)
    col_starts = _axis_starts(n, cols, region_size)
    origins = tuple((r, c) for r in row_starts for c in col_starts)
    return DetectorLayout(grid_n=n, region_size=region_size, origins=origins)


@dataclass(frozen=True)
class MetaNetwork:
    """Immutable trainable device: config plus one PhaseLayer per layer."""

    config: PhysicsConfig
    layers: tuple
    detector: DetectorLayout

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(layers) < 1:
            raise ValueError("need at least one layer")
        if len(layers) != self.config.num_layers:
            raise GridMismatchError(
                f"config declares {self.config.num_layers} layers, got {len(layers)}"
            )
        for i, layer in enumerate(layers):
            if layer.n != self.config.grid_n:
                raise GridMismatchError(
                    f"layer {i} is {layer.n}x{layer.n}, config grid_n={self.config.grid_n}"
                )
        if self.detector.grid_n != self.config.grid_n:
            raise GridMismatchError(
                f"detector grid {self.detector.grid_n} != config grid_n {self.config.grid_n}"
            )

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def with_layers(self, layers) -> "MetaNetwork":
        return replace(self, layers=tuple(layers))


@dataclass
class ForwardTrace:
    """Every per-plane field of one forward pass, cached for the adjoint sweep.

    pre_layer[l] is the field arriving at layer l, post_layer[l] the field
    right after its modulation. Arrays may be stacks (..., n, n); the energy
    vector is then (..., 10), indexed by digit.
    """

    u0: np.ndarray
    pre_layer: tuple
    post_layer: tuple
    u_out: np.ndarray
    region_energies: np.ndarray


def apply_layer(u: ComplexField, layer: PhaseLayer) -> ComplexField:
    """Element-wise modulation out_ij = u_ij * t * exp(j*phi_ij)."""
    if u.n != layer.n:
        raise GridMismatchError(f"field is {u.n}x{u.n}, layer is {layer.n}x{layer.n}")
    return ComplexField(u.data * layer.modulation, plane_tag=u.plane_tag)


def forward_arrays(
    net: MetaNetwork,
    u0: np.ndarray,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
) -> ForwardTrace:
    """Forward pass on raw arrays, batched over leading axes.

    The single shared implementation behind :func:`forward` and the training
    loop; u0 has shape (..., n, n).
    """
    u0 = np.asarray(u0, dtype=np.complex128)
    if u0.shape[-2:] != (net.config.grid_n,) * 2:
        raise GridMismatchError(
            f"input shape {u0.shape} does not end in "
            f"({net.config.grid_n}, {net.config.grid_n})"
        )
    cfg = net.config
    pre, post = [], []
    u = get_operator(cfg, cfg.object_gap, settings).apply(u0, workers)
    for l, layer in enumerate(net.layers):
        pre.append(u)
        v = u * layer.modulation
        post.append(v)
        gap = cfg.detector_gap if l == net.num_layers - 1 else cfg.layer_gap
        u = get_operator(cfg, gap, settings).apply(v, workers)
    energies = net.detector.region_energies(u)
    return ForwardTrace(u0, tuple(pre), tuple(post), u, energies)


def forward(
    net: MetaNetwork,
    u0: ComplexField,
    settings: PropagationSettings = DEFAULT_SETTINGS,
    workers: int | None = None,
) -> ForwardTrace:
    """Run one field through the device and read out region energies.

    Raises
    ------
    GridMismatchError
        If the field grid disagrees with the network grid.
    ZeroFieldError
        If the input carries no energy.
    """
    if u0.n != net.config.grid_n:
        raise GridMismatchError(f"field is {u0.n}x{u0.n}, config grid_n={net.config.grid_n}")
    if energy(u0) == 0.0:
        raise ZeroFieldError("forward pass needs a nonzero input field")
    return forward_arrays(net, u0.data, settings, workers)


def region_probabilities(region_energies: np.ndarray) -> np.ndarray:
    """Normalize region energies to a probability vector, batched over (..., 10).

    Raises
    ------
    AllZeroRegionsError
        If any energy vector sums to zero (no scattered energy reached any
        region, so the readout is undefined).
    """
    e = np.asarray(region_energies, dtype=np.float64)
    if np.any(e < 0):
        raise ValueError("region energies must be nonnegative")
    total = e.sum(axis=-1, keepdims=True)
    if np.any(total == 0.0):
        raise AllZeroRegionsError("all detector regions received zero energy")
    return e / total


def classify(p: np.ndarray) -> int:
    """Digit with the largest probability; ties go to the lowest digit."""
    return int(np.argmax(np.asarray(p)))


def save_model(net: MetaNetwork, path) -> None:
    """Write a network to JSON (config, detector layout, per-layer phases).

    Floats are emitted at 17 significant digits, which makes
    write -> read -> write byte-identical.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(net))
        fh.write("\n")


def serialize_model(net: MetaNetwork) -> str:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": net.config.to_dict(),
        "detector": net.detector.to_dict(),
        "layers": [
            {
                "transmission": layer.transmission,
                "phases": layer.phases.reshape(-1),
            }
            for layer in net.layers
        ],
    }
    return dumps_stable(doc)


def load_model(path) -> MetaNetwork:
    """Read a network written by :func:`save_model`.

    Raises
    ------
    ModelFormatError
        On missing keys, a wrong format_version, or malformed phase grids.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: model must be a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported model format_version {version!r}")
    try:
        config = PhysicsConfig.from_dict(doc["config"])
        detector = DetectorLayout.from_dict(doc["detector"])
        raw_layers = doc["layers"]
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing model key {exc}") from exc
    n = config.grid_n
    layers = []
    for i, raw in enumerate(raw_layers):
        try:
            flat = np.asarray(raw["phases"], dtype=np.float64)
            t = float(raw["transmission"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"{path}: bad layer {i}: {exc}") from exc
        if flat.size != n * n:
            raise ModelFormatError(
                f"{path}: layer {i} has {flat.size} phases, expected {n * n}"
            )
        layers.append(PhaseLayer(flat.reshape(n, n), t))
    return MetaNetwork(config=config, layers=tuple(layers), detector=detector)
