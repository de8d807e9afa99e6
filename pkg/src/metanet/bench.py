"""Wall-time and agreement comparison of the two propagation methods.

Timings cover the apply step only (operators are precomputed for both
methods, which matches how training uses them). The error column reports the
relative L2 disagreement of the spectral result against direct summation on
a band-limited random field: white per-cell noise is dominated by spatial
frequencies beyond the propagating cone, where the two discretizations
legitimately differ, so it would benchmark aliasing rather than agreement.
The raw white-noise disagreement is still interesting; the acceptance suite
records both.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft

from .core import PhysicsConfig, float_repr17
from .propagation import (
    DIRECT_SETTINGS,
    EvanescentPolicy,
    Method,
    PropagationOperator,
    PropagationSettings,
)


def bandlimited_noise(n: int, config: PhysicsConfig, rng: np.random.Generator) -> np.ndarray:
    """Unit-energy complex noise restricted to the propagating cone.

    Gaussian noise per cell, with every spatial-frequency mode having
    kx^2 + ky^2 > k^2 removed on the n x n frame.
    """
    u = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    kt = 2.0 * np.pi * np.fft.fftfreq(n, d=config.pitch)
    keep = (kt[:, None] ** 2 + kt[None, :] ** 2) <= config.wavenumber**2
    spec = scipy.fft.fft2(u) * keep
    u = scipy.fft.ifft2(spec)
    return u / np.sqrt(np.sum(np.abs(u) ** 2))


@dataclass
class BenchRow:
    method: str
    n: int
    pad_factor: int | None
    z_m: float
    wall_time_us_median: float
    rel_err_vs_direct: float


def _median_time_us(op: PropagationOperator, u: np.ndarray, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        op.apply(u)
        times.append(time.perf_counter() - t0)
    return float(np.median(times) * 1e6)


def run_bench(
    sizes=(16, 28, 56),
    z: float = 0.175,
    pad_factor: int = 4,
    repeats: int = 5,
    seed: int = 42,
    log=None,
) -> list:
    """Time both methods per grid size and measure their disagreement."""
    rng = np.random.default_rng(seed)
    rows = []
    base = PhysicsConfig()
    spectral = PropagationSettings(Method.SPECTRAL, pad_factor, EvanescentPolicy.ZERO)
    for n in sizes:
        config = replace(base, grid_n=int(n))
        u = bandlimited_noise(config.grid_n, config, rng)
        op_d = PropagationOperator(config, z, DIRECT_SETTINGS)
        op_s = PropagationOperator(config, z, spectral)
        ref = op_d.apply(u)
        out = op_s.apply(u)
        rel = float(np.linalg.norm(out - ref) / np.linalg.norm(ref))
        t_d = _median_time_us(op_d, u, repeats)
        t_s = _median_time_us(op_s, u, repeats)
        rows.append(BenchRow("direct", n, None, z, t_d, 0.0))
        rows.append(BenchRow("spectral", n, pad_factor, z, t_s, rel))
        if log is not None:
            log(
                f"n {n:3d}  direct {t_d:10.1f} us  spectral {t_s:10.1f} us  "
                f"rel_err {rel:.4f}"
            )
    return rows


def bench_csv(rows) -> str:
    lines = ["method,n,pad_factor,z_m,wall_time_us_median,rel_err_vs_direct"]
    for r in rows:
        pad = "" if r.pad_factor is None else str(r.pad_factor)
        lines.append(
            f"{r.method},{r.n},{pad},{float_repr17(r.z_m)},"
            f"{float_repr17(r.wall_time_us_median)},{float_repr17(r.rel_err_vs_direct)}"
        )
    return "\n".join(lines) + "\n"
