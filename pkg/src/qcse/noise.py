"""Additive white Gaussian noise at a requested SNR."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import MASK64, standard_normals
from .signal_io import AudioBuffer


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite, got {self.snr_db}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def signal_power(buf: AudioBuffer) -> float:
    """Mean square amplitude over the whole buffer."""
    if len(buf) == 0:
        raise ValueError("signal power of an empty buffer is undefined")
    x = buf.samples
    return float(np.dot(x, x) / len(x))


def noise_variance(power: float, snr_db: float) -> float:
    return power / 10.0 ** (snr_db / 10.0)


def add_awgn(buf: AudioBuffer, spec: NoiseSpec) -> AudioBuffer:
    """Return ``buf`` plus i.i.d. Gaussian noise with variance P / 10**(snr/10).

    The noise draws depend only on ``spec.seed`` and the buffer length (see
    :mod:`qcse.rng`). The result is not clipped.
    """
    power = signal_power(buf)
    if power <= 0:
        raise ValueError("cannot set an SNR for a zero-power signal")
    sigma = math.sqrt(noise_variance(power, spec.snr_db))
    noise = sigma * standard_normals(spec.seed, len(buf))
    return AudioBuffer(buf.samples + noise, buf.sample_rate)


def measured_snr_db(clean: AudioBuffer, noisy: AudioBuffer) -> float:
    """10*log10 of clean power over the power of ``noisy - clean``."""
    resid = noisy.samples - clean.samples
    return 10.0 * math.log10(signal_power(clean) / float(np.mean(resid * resid)))
