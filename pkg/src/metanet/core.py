"""Physical configuration, grid geometry, and complex field containers.

Everything downstream (diffraction, the layered network, training) works on
the value types defined here. A field is a square n x n grid of dimensionless
complex pressure samples at one z-plane, spaced ``pitch`` meters apart.
Energy is the plain unweighted sum of |u|^2; the cell-area factor cancels in
every classification and loss quantity, so it is left out by convention.

All complex arithmetic is 64-bit (complex128). Gradient verification against
finite differences depends on this, so nothing here ever downcasts.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (
    BadMagicError,
    ConfigError,
    FileFormatError,
    TruncatedFileError,
    ZeroFieldError,
)

FIELD_MAGIC = b"MNNF"
FIELD_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PhysicsConfig:
    """Geometry and acoustics of one simulated device.

    Defaults describe the reference device: a 28 x 28 grid of 2 cm cells
    (56 x 56 cm aperture) driven at 3 kHz in air, with 17.5 cm between all
    consecutive planes and two trainable layers.

    Parameters
    ----------
    frequency : float
        Operating frequency in Hz.
    sound_speed : float
        Speed of sound in the background medium, m/s.
    grid_n : int
        Cells per side of every plane (object, layers, detector).
    pitch : float
        Transverse cell size in meters. Must stay subwavelength.
    layer_gap : float
        Axial distance between consecutive phase layers, meters.
    num_layers : int
        Number of trainable phase layers.
    object_gap : float
        Object plane to first layer, meters.
    detector_gap : float
        Last layer to detector plane, meters.
    """

    frequency: float = 3000.0
    sound_speed: float = 343.0
    grid_n: int = 28
    pitch: float = 0.02
    layer_gap: float = 0.175
    num_layers: int = 2
    object_gap: float = 0.175
    detector_gap: float = 0.175

    def __post_init__(self):
        if not self.frequency > 0:
            raise ConfigError(f"frequency must be positive, got {self.frequency}")
        if not self.sound_speed > 0:
            raise ConfigError(f"sound_speed must be positive, got {self.sound_speed}")
        if not self.pitch > 0:
            raise ConfigError(f"pitch must be positive, got {self.pitch}")
        if int(self.grid_n) != self.grid_n or self.grid_n < 2:
            raise ConfigError(f"grid_n must be an integer >= 2, got {self.grid_n}")
        if int(self.num_layers) != self.num_layers or self.num_layers < 1:
            raise ConfigError(f"num_layers must be an integer >= 1, got {self.num_layers}")
        for name in ("layer_gap", "object_gap", "detector_gap"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.pitch < self.wavelength:
            raise ConfigError(
                f"pitch {self.pitch} m is not subwavelength "
                f"(wavelength {self.wavelength:.6g} m)"
            )

    @property
    def wavelength(self) -> float:
        """Wavelength in meters, sound_speed / frequency."""
        return self.sound_speed / self.frequency

    @property
    def wavenumber(self) -> float:
        """Angular wavenumber 2*pi/wavelength, rad/m."""
        return 2.0 * np.pi / self.wavelength

    @property
    def aperture(self) -> float:
        """Transverse side length of every plane, grid_n * pitch, meters."""
        return self.grid_n * self.pitch

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "PhysicsConfig":
        """Build from a flat mapping. Unknown keys are rejected."""
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


def wavelength(config: PhysicsConfig) -> float:
    """Wavelength in meters for the configured frequency and sound speed."""
    return config.wavelength


def load_config(path) -> PhysicsConfig:
    """Read a PhysicsConfig from a flat JSON file.

    Missing keys take their defaults; unknown keys raise :class:`ConfigError`.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return PhysicsConfig.from_dict(raw)


def save_config(config: PhysicsConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")


def float_repr17(x) -> str:
    """Decimal form of a float at 17 significant digits.

    17 digits are enough to reconstruct any f64 exactly, so text written this
    way survives write -> read -> write byte-identically. Zero is emitted as
    "0" regardless of sign so -0.0 cannot leak into the text form.
    """
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def dumps_stable(obj) -> str:
    """Deterministic JSON emitter for every text artifact of the package.

    Keys keep insertion order (json.load preserves document order on read,
    so round-trips are stable), floats use :func:`float_repr17`, and lists of
    scalars stay on one line. Output ends without a trailing newline.
    """
    return _emit(obj, 0)


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return float_repr17(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_emit(v, indent) for v in seq) + "]"
        inner = ",\n".join("  " * (indent + 1) + _emit(v, indent + 1) for v in seq)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            "  " * (indent + 1) + json.dumps(str(k)) + ": " + _emit(v, indent + 1)
            for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Immutable n x n grid of complex pressure samples at one z-plane.

    ``plane_tag`` is a free-form provenance label ("object", "detector", ...)
    and carries no semantics.
    """

    data: np.ndarray
    plane_tag: str = ""

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128)  # always copy, we freeze it
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"field must be a square 2D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ValueError("field contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]


def energy(field: ComplexField) -> float:
    """Total energy sum(|u_ij|^2), unweighted."""
    return float(np.sum(np.abs(field.data) ** 2))


def normalize(field: ComplexField) -> ComplexField:
    """Rescale to unit energy, preserving direction.

    Raises
    ------
    ZeroFieldError
        If the field has zero energy.
    """
    e = energy(field)
    if e == 0.0:
        raise ZeroFieldError("cannot normalize a zero field")
    return ComplexField(field.data / np.sqrt(e), plane_tag=field.plane_tag)


def write_field(field: ComplexField, path) -> None:
    """Dump a field in the MNNF binary format.

    Little-endian: magic ``MNNF``, u32 version (1), u32 n, then n*n pairs of
    f64 (real, imag) in row-major order.
    """
    payload = np.ascontiguousarray(field.data, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(FIELD_MAGIC)
        fh.write(struct.pack("<II", FIELD_FORMAT_VERSION, field.n))
        fh.write(payload)


def read_field(path, plane_tag: str = "") -> ComplexField:
    """Read an MNNF field dump written by :func:`write_field`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12:
        raise TruncatedFileError(f"{path}: MNNF header needs 12 bytes, file has {len(blob)}")
    if blob[:4] != FIELD_MAGIC:
        raise BadMagicError(f"{path}: expected magic {FIELD_MAGIC!r}, got {blob[:4]!r}")
    version, n = struct.unpack("<II", blob[4:12])
    if version != FIELD_FORMAT_VERSION:
        raise FileFormatError(f"{path}: unsupported MNNF version {version}")
    expected = 12 + 16 * n * n
    if len(blob) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} bytes, got {len(blob)}")
    data = np.frombuffer(blob[12:expected], dtype="<c16").reshape(n, n)
    return ComplexField(data, plane_tag=plane_tag)
