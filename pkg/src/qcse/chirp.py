"""Spectra evaluated on a circle of radius r in the z-plane.

The fast route pre-weights the frame by ``r**-n`` and takes an ordinary FFT;
:func:`chirp_spectrum_oracle` sums the z-transform term by term and exists to
check it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RADIUS = 1.01
LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class ChirpConfig:
    radius: float = DEFAULT_RADIUS
    fft_size: int = 1024

    def __post_init__(self):
        if not np.isfinite(self.radius) or self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        n = self.fft_size
        if n <= 0 or n & (n - 1):
            raise ValueError(f"fft_size must be a power of two, got {n}")

    @property
    def is_unit_circle(self):
        return self.radius == 1.0


def chirp_weights(radius: float, n: int) -> np.ndarray:
    """``radius ** -i`` for ``i = 0 .. n-1``."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if n <= 0:
        raise ValueError("n must be positive")
    return float(radius) ** -np.arange(n, dtype=np.float64)


def _check_length(length, fft_size):
    if length > fft_size:
        raise ValueError(f"frame of {length} samples exceeds fft_size {fft_size}")


def chirp_spectrum(frame, cfg: ChirpConfig) -> np.ndarray:
    """Z-transform of ``frame`` at ``radius * exp(2j*pi*k/fft_size)``.

    Weights apply to the real samples only; zero padding to ``fft_size``
    comes after. Works row-wise on a 2-D stack of frames.
    """
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.shape[-1]
    _check_length(n, cfg.fft_size)
    if cfg.is_unit_circle:
        weighted = frame
    else:
        weighted = frame * chirp_weights(cfg.radius, n)
    return np.fft.fft(weighted, n=cfg.fft_size, axis=-1)


def chirp_spectrum_oracle(frame, radius: float, fft_size: int) -> np.ndarray:
    """Direct O(N*K) evaluation of sum_n x[n] * z_k**-n, z_k = radius*exp(j*w_k)."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1:
        raise ValueError("oracle takes a single frame")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    _check_length(frame.shape[0], fft_size)
    out = np.empty(fft_size, dtype=np.complex128)
    for k in range(fft_size):
        z = radius * np.exp(2j * np.pi * k / fft_size)
        acc = 0j
        for n, x in enumerate(frame):
            if x:
                acc += x * z ** (-n)
        out[k] = acc
    return out


def log_magnitude(spec) -> np.ndarray:
    """``20*log10(|X| + 1e-10)`` over the first half of the bins."""
    spec = np.asarray(spec)
    half = spec.shape[-1] // 2
    return 20.0 * np.log10(np.abs(spec[..., :half]) + LOG_FLOOR)
