"""From trained phases to buildable unit-cell geometry.

A fabricated cell realizes its phase shift through one geometric parameter,
the pipe height h. The phase-vs-height curve is measured per cell design and
supplied as a calibration table; this module never invents that curve, it
only inverts it. A synthetic linear table is bundled for tests and dry runs.

Quantization rounds phases onto a uniform lattice of 2*pi/levels steps,
which is how a finite set of machined heights shows up in practice; the
accuracy cost of a given level count is measured by re-evaluating the
quantized network, not estimated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import float_repr17
from .errors import BadLevelsError, InvalidTableError
from .network import MetaNetwork, PhaseLayer

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class CalibrationTable:
    """Sampled phase-vs-height curve of one unit-cell design.

    Heights must be strictly increasing and phases strictly monotone, and
    the phase span must cover a full turn up to one local sample gap, so the
    inverse lookup is single-valued over [0, 2*pi).
    """

    heights: np.ndarray
    phases: np.ndarray
    cell_width: float = 0.02
    cell_thickness: float = 0.07

    def __post_init__(self):
        heights = np.array(self.heights, dtype=np.float64)
        phases = np.array(self.phases, dtype=np.float64)
        if heights.ndim != 1 or heights.shape != phases.shape:
            raise InvalidTableError(
                f"need matching 1D height/phase samples, got {heights.shape} and {phases.shape}"
            )
        if heights.size < 2:
            raise InvalidTableError("calibration table needs at least 2 samples")
        if not np.all(np.isfinite(heights)) or not np.all(np.isfinite(phases)):
            raise InvalidTableError("calibration table contains non-finite samples")
        dh = np.diff(heights)
        if not np.all(dh > 0):
            raise InvalidTableError("heights must be strictly increasing")
        dp = np.diff(phases)
        if not (np.all(dp > 0) or np.all(dp < 0)):
            raise InvalidTableError("phases must be strictly monotone")
        span = abs(float(phases[-1] - phases[0]))
        gap = float(np.max(np.abs(dp)))
        if span < TWO_PI - gap:
            raise InvalidTableError(
                f"phase span {span:.4f} rad leaves more than one sample gap "
                f"({gap:.4f} rad) short of a full turn"
            )
        heights.flags.writeable = False
        phases.flags.writeable = False
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "phases", phases)

    @property
    def increasing(self) -> bool:
        return bool(self.phases[-1] > self.phases[0])


def synthetic_linear_table(
    h_max: float = 0.07, samples: int = 65, cell_width: float = 0.02
) -> CalibrationTable:
    """Idealized straight-line curve phi = 2*pi*h/h_max, for tests and demos."""
    heights = np.linspace(0.0, h_max, samples)
    return CalibrationTable(
        heights, TWO_PI * heights / h_max, cell_width=cell_width, cell_thickness=h_max
    )


def load_table(path, cell_width: float = 0.02, cell_thickness: float = 0.07) -> CalibrationTable:
    """Read a calibration CSV with header ``height_m,phase_rad``."""
    heights, phases = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["height_m", "phase_rad"]:
            raise InvalidTableError(f"{path}: expected header 'height_m,phase_rad', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise InvalidTableError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                heights.append(float(row[0]))
                phases.append(float(row[1]))
            except ValueError as exc:
                raise InvalidTableError(f"{path}:{lineno}: {exc}") from exc
    return CalibrationTable(heights, phases, cell_width=cell_width, cell_thickness=cell_thickness)


def save_table(table: CalibrationTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("height_m,phase_rad\n")
        for h, p in zip(table.heights, table.phases):
            fh.write(f"{float_repr17(h)},{float_repr17(p)}\n")


def quantize_phase_array(phases: np.ndarray, levels: int) -> np.ndarray:
    """Wrap to [0, 2*pi) and round to the nearest multiple of 2*pi/levels.

    Exact midpoints round toward the lower level; the result is bitwise
    idempotent under re-application.
    """
    if int(levels) != levels or levels < 2:
        raise BadLevelsError(f"levels must be an integer >= 2, got {levels}")
    step = TWO_PI / levels
    wrapped = np.mod(np.asarray(phases, dtype=np.float64), TWO_PI)
    index = np.ceil(wrapped / step - 0.5).astype(np.int64) % levels
    return index * step


def quantize_phases(net: MetaNetwork, levels: int) -> MetaNetwork:
    """Network with every layer's phases snapped to the 2*pi/levels lattice."""
    return net.with_layers(
        PhaseLayer(quantize_phase_array(layer.phases, levels), layer.transmission)
        for layer in net.layers
    )


def _lookup_frame(table: CalibrationTable):
    """Phases and heights ordered by increasing phase."""
    if table.increasing:
        return table.phases, table.heights
    return table.phases[::-1], table.heights[::-1]


def phase_to_height(phi, table: CalibrationTable):
    """Height realizing a phase, by piecewise-linear inverse interpolation.

    The phase is wrapped into the table's covered turn; values in the
    residual uncovered gap (at most one sample spacing) clamp to the nearer
    table end. Scalar in, float out; array in, array out.
    """
    phases, heights = _lookup_frame(table)
    lo, hi = float(phases[0]), float(phases[-1])
    x = lo + np.mod(np.asarray(phi, dtype=np.float64) - lo, TWO_PI)
    x = np.clip(x, lo, hi)
    h = np.interp(x, phases, heights)
    return float(h) if h.ndim == 0 else h


def height_to_phase(h, table: CalibrationTable):
    """Forward interpolation of the table, for round-trip checks."""
    p = np.interp(np.asarray(h, dtype=np.float64), table.heights, table.phases)
    return float(p) if p.ndim == 0 else p


MANIFEST_HEADER = "layer,row,col,phase_rad,height_m"


def export_manifest(net: MetaNetwork, table: CalibrationTable, path) -> int:
    """Write one CSV record per meta-neuron: layer,row,col,phase_rad,height_m.

    Rows are ordered by (layer, row, col) ascending; phases are wrapped to
    [0, 2*pi). Returns the record count (num_layers * n^2).
    """
    rows = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MANIFEST_HEADER + "\n")
        for l, layer in enumerate(net.layers):
            wrapped = layer.wrapped()
            h = phase_to_height(wrapped, table)
            for r in range(layer.n):
                for c in range(layer.n):
                    fh.write(
                        f"{l},{r},{c},{float_repr17(wrapped[r, c])},"
                        f"{float_repr17(h[r, c])}\n"
                    )
                    rows += 1
    return rows


def read_manifest(path) -> np.ndarray:
    """Parse a geometry manifest into a structured array.

    Fields: layer, row, col (int), phase_rad, height_m (float).
    """
    dtype = np.dtype(
        [("layer", np.int64), ("row", np.int64), ("col", np.int64),
         ("phase_rad", np.float64), ("height_m", np.float64)]
    )
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(h.strip() for h in header) != MANIFEST_HEADER:
            raise InvalidTableError(f"{path}: expected header '{MANIFEST_HEADER}', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(
                    (int(row[0]), int(row[1]), int(row[2]), float(row[3]), float(row[4]))
                )
            except (ValueError, IndexError) as exc:
                raise InvalidTableError(f"{path}:{lineno}: {exc}") from exc
    return np.array(records, dtype=dtype)


def phases_from_manifest(manifest: np.ndarray) -> list:
    """Rebuild per-layer wrapped phase grids from manifest records.

    The manifest fully determines the wrapped-phase network, so a network
    rebuilt from these grids evaluates identically to the exported one.
    """
    if manifest.size == 0:
        raise InvalidTableError("manifest holds no records")
    num_layers = int(manifest["layer"].max()) + 1
    n = int(max(manifest["row"].max(), manifest["col"].max())) + 1
    expected = num_layers * n * n
    if manifest.size != expected:
        raise InvalidTableError(
            f"manifest has {manifest.size} records, expected {expected} "
            f"for {num_layers} layers of {n}x{n}"
        )
    grids = [np.full((n, n), np.nan) for _ in range(num_layers)]
    for rec in manifest:
        grids[rec["layer"]][rec["row"], rec["col"]] = rec["phase_rad"]
    for l, grid in enumerate(grids):
        if not np.all(np.isfinite(grid)):
            raise InvalidTableError(f"manifest is missing cells in layer {l}")
    return grids
