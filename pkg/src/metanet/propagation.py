"""Free-space scalar diffraction between parallel planes.

Two interchangeable discretizations of the same physics:

* ``Method.DIRECT`` sums the Rayleigh-Sommerfeld secondary-source weight
  from every input cell to every output cell. O(n^4) per plane pair, exact
  quadrature of the Huygens picture, kept as the oracle and benchmark
  baseline.
* ``Method.SPECTRAL`` zero-pads, multiplies by the angular-spectrum transfer
  function exp(j*z*sqrt(k^2 - kx^2 - ky^2)) per plane-wave mode, and crops.
  O(n^2 log n) and the default for training.

Both carry an exact adjoint (conjugate transpose of the same discrete
operator), which the training module relies on; the adjoint identity
<x, Gy> == <G+ x, y> holds to machine precision per method.

Time convention is exp(-j*omega*t): outgoing waves carry phase +k*r and the
propagating-mode multiplier is exp(+j*z*kz).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy.signal import convolve2d

from .core import ComplexField, PhysicsConfig
from .errors import GridMismatchError, MethodMismatchError, NonPositiveDistanceError


class Method(str, enum.Enum):
    DIRECT = "direct"
    SPECTRAL = "spectral"


class EvanescentPolicy(str, enum.Enum):
    """What the spectral multiplier does beyond the propagating cone.

    ZERO discards evanescent modes (|H| <= 1 everywhere, norm-nonincreasing);
    DECAY applies the physical attenuation exp(-z*sqrt(kt^2 - k^2)).
    """

    ZERO = "zero"
    DECAY = "decay"


@dataclass(frozen=True)
class PropagationSettings:
    """Discretization choice shared by a forward/adjoint pair.

    One settings value is used consistently for the forward pass and the
    gradient within a training run; mixing methods across that pair is
    rejected (see ``training.gradient``).
    """

    method: Method = Method.SPECTRAL
    pad_factor: int = 4
    evanescent_policy: EvanescentPolicy = EvanescentPolicy.ZERO

    def __post_init__(self):
        if int(self.pad_factor) != self.pad_factor or self.pad_factor < 1:
            raise ValueError(f"pad_factor must be an integer >= 1, got {self.pad_factor}")


DEFAULT_SETTINGS = PropagationSettings()
DIRECT_SETTINGS = PropagationSettings(method=Method.DIRECT)


def rs_weight(dx, dy, z: float, config: PhysicsConfig):
    """Rayleigh-Sommerfeld secondary-source weight for one cell offset.

    Returns ``A * (z/r^2) * (1/(2*pi*r) + 1/(j*lambda)) * exp(j*2*pi*r/lambda)``
    with ``r = sqrt(dx^2 + dy^2 + z^2)`` and ``A = pitch^2`` the cell area.
    Accepts scalars or broadcastable arrays for ``dx``/``dy``.

    Raises
    ------
    NonPositiveDistanceError
        If z <= 0.
    """
    if not z > 0:
        raise NonPositiveDistanceError(f"propagation distance must be > 0, got {z}")
    lam = config.wavelength
    dx = np.asarray(dx, dtype=np.float64)
    dy = np.asarray(dy, dtype=np.float64)
    r = np.sqrt(dx * dx + dy * dy + z * z)
    w = (
        config.pitch**2
        * (z / r**2)
        * (1.0 / (2.0 * np.pi * r) + 1.0 / (1j * lam))
        * np.exp(2j * np.pi * r / lam)
    )
    return complex(w) if w.ndim == 0 else w


def kernel_weights(n: int, z: float, config: PhysicsConfig) -> np.ndarray:
    """(2n-1) x (2n-1) table of rs_weight over all cell offsets at distance z.

    Entry [n-1+di, n-1+dj] is the weight for offset (di, dj). The 4-fold
    mirror symmetry w(di,dj) == w(-di,dj) == w(di,-dj) holds bit-exactly
    because offsets enter only through their squares.
    """
    offsets = (np.arange(2 * n - 1) - (n - 1)) * config.pitch
    dx, dy = np.meshgrid(offsets, offsets, indexing="ij")
    return rs_weight(dx, dy, z, config)


def _spectral_multiplier(
    n: int, z: float, config: PhysicsConfig, pad_factor: int, policy: EvanescentPolicy
) -> np.ndarray:
    """Angular-spectrum transfer function on the padded frequency grid."""
    big = pad_factor * n
    k = config.wavenumber
    kt = 2.0 * np.pi * np.fft.fftfreq(big, d=config.pitch)
    kx2 = kt[:, None] ** 2
    ky2 = kt[None, :] ** 2
    kt2 = kx2 + ky2
    h = np.zeros((big, big), dtype=np.complex128)
    prop = kt2 <= k * k
    h[prop] = np.exp(1j * z * np.sqrt(k * k - kt2[prop]))
    if policy is EvanescentPolicy.DECAY:
        h[~prop] = np.exp(-z * np.sqrt(kt2[~prop] - k * k))
    return h


class PropagationOperator:
    """Precomputed diffraction from one plane to a parallel plane.

    Immutable after construction and safe to share; ``apply`` and
    ``apply_adjoint`` are pure and accept stacks of fields with shape
    (..., n, n), where n = config.grid_n.
    """

    def __init__(self, config: PhysicsConfig, distance: float,
                 settings: PropagationSettings = DEFAULT_SETTINGS):
        if not distance > 0:
            raise NonPositiveDistanceError(f"propagation distance must be > 0, got {distance}")
        self.config = config
        self.distance = float(distance)
        self.settings = settings
        self.n = config.grid_n
        if settings.method is Method.DIRECT:
            self._kernel = kernel_weights(self.n, distance, config)
            self._kernel_conj = np.conj(self._kernel)
        else:
            self._mult = _spectral_multiplier(
                self.n, distance, config, settings.pad_factor, settings.evanescent_policy
            )
            self._mult_conj = np.conj(self._mult)

    def _check(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.complex128)
        if arr.shape[-2:] != (self.n, self.n):
            raise GridMismatchError(
                f"operator built for {self.n}x{self.n}, got field shape {arr.shape}"
            )
        return arr

    def apply(self, arr: np.ndarray, workers: int | None = None) -> np.ndarray:
        arr = self._check(arr)
        if self.settings.method is Method.DIRECT:
            return self._convolve(arr, self._kernel)
        return self._spectral(arr, self._mult, workers)

    def apply_adjoint(self, arr: np.ndarray, workers: int | None = None) -> np.ndarray:
        arr = self._check(arr)
        if self.settings.method is Method.DIRECT:
            # kernel is offset-symmetric, so the transpose is the same
            # convolution and the adjoint just conjugates the weights
            return self._convolve(arr, self._kernel_conj)
        return self._spectral(arr, self._mult_conj, workers)

    def _convolve(self, arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
        if arr.ndim == 2:
            return convolve2d(arr, kernel, mode="same")
        flat = arr.reshape(-1, self.n, self.n)
        out = np.empty_like(flat)
        for i in range(flat.shape[0]):
            out[i] = convolve2d(flat[i], kernel, mode="same")
        return out.reshape(arr.shape)

    def _spectral(self, arr: np.ndarray, mult: np.ndarray, workers) -> np.ndarray:
        n, big = self.n, self.settings.pad_factor * self.n
        padded = np.zeros(arr.shape[:-2] + (big, big), dtype=np.complex128)
        padded[..., :n, :n] = arr
        kw = {} if workers is None else {"workers": workers}
        spec = scipy.fft.fft2(padded, axes=(-2, -1), **kw)
        spec *= mult
        out = scipy.fft.ifft2(spec, axes=(-2, -1), **kw)
        return np.ascontiguousarray(out[..., :n, :n])


@lru_cache(maxsize=64)
def get_operator(config: PhysicsConfig, distance: float,
                 settings: PropagationSettings = DEFAULT_SETTINGS) -> PropagationOperator:
    """Shared operator cache; kernels and multipliers are reused per distance."""
    return PropagationOperator(config, distance, settings)


def _wrap(field: ComplexField, config: PhysicsConfig) -> None:
    if field.n != config.grid_n:
        raise GridMismatchError(f"field is {field.n}x{field.n}, config grid_n={config.grid_n}")


def propagate_direct(u: ComplexField, z: float, config: PhysicsConfig) -> ComplexField:
    """Diffract by direct Rayleigh-Sommerfeld summation over all cell pairs."""
    _wrap(u, config)
    op = get_operator(config, z, DIRECT_SETTINGS)
    return ComplexField(op.apply(u.data), plane_tag=u.plane_tag)


def propagate_spectral(
    u: ComplexField,
    z: float,
    config: PhysicsConfig,
    pad_factor: int = 4,
    evanescent_policy: EvanescentPolicy = EvanescentPolicy.ZERO,
) -> ComplexField:
    """Diffract via the padded FFT angular-spectrum method.

    pad_factor >= 2 is recommended; pad_factor = 1 propagates on the periodic
    frame, which is exactly what the plane-wave eigenmode and semigroup
    properties refer to.
    """
    _wrap(u, config)
    settings = PropagationSettings(Method.SPECTRAL, pad_factor, evanescent_policy)
    op = get_operator(config, z, settings)
    return ComplexField(op.apply(u.data), plane_tag=u.plane_tag)


def adjoint_propagate(
    u: ComplexField,
    z: float,
    config: PhysicsConfig,
    method: Method = Method.SPECTRAL,
    pad_factor: int = 4,
    evanescent_policy: EvanescentPolicy = EvanescentPolicy.ZERO,
    forward_method: Method | None = None,
) -> ComplexField:
    """Apply the conjugate transpose of the selected forward discretization.

    When the call is the backward half of a forward/adjoint pair, pass the
    forward pass's method as ``forward_method``; adjointing a different
    discretization than the one that produced the field is rejected, since
    the two operators' adjoints are not interchangeable.
    """
    _wrap(u, config)
    if forward_method is not None and forward_method != method:
        raise MethodMismatchError(
            f"forward used {forward_method.value}, cannot apply the {method.value} adjoint"
        )
    if method is Method.DIRECT:
        settings = DIRECT_SETTINGS
    else:
        settings = PropagationSettings(Method.SPECTRAL, pad_factor, evanescent_policy)
    op = get_operator(config, z, settings)
    return ComplexField(op.apply_adjoint(u.data), plane_tag=u.plane_tag)
