"""Dataset manifests and a synthetic parallel normal/whisper corpus.

The synthesizer is a test fixture, not a speech synthesizer. Normal items
drive a cascade of second-order formant resonators with a jittered impulse
train. Whisper items drive the same cascade with white noise, after moving
the formants up, widening their bandwidths and lowering the output level.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .features import read_features, write_features  # noqa: F401  (re-exported)
from .rng import derive_seed
from .signal_io import AudioBuffer, write_wav

LABEL_NAMES = ("normal", "whisper")
SPLITS = ("train", "test")
MANIFEST_FIELDS = ("path", "label", "split")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    split: str

    def __post_init__(self):
        if not self.path:
            raise ValueError("manifest path must be non-empty")
        if self.label not in LABEL_NAMES:
            raise ValueError(f"unknown label {self.label!r}")
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")

    @property
    def label_index(self):
        return LABEL_NAMES.index(self.label)


def load_manifest(path) -> list:
    """Read a ``path,label,split`` CSV. Relative paths resolve against its directory."""
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ManifestError(f"{path}: empty manifest")
    header = [h.strip() for h in rows[0]]
    if header != list(MANIFEST_FIELDS):
        raise ManifestError(f"{path}: header must be {','.join(MANIFEST_FIELDS)}, got {rows[0]}")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ManifestError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        p, label, split = (c.strip() for c in row)
        try:
            entry = ManifestEntry(p, label, split)
        except ValueError as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from None
        if not os.path.isabs(p):
            entry = ManifestEntry(os.path.join(base, p), label, split)
        entries.append(entry)
    if not entries:
        raise ManifestError(f"{path}: manifest has a header but no rows")
    return entries


def write_manifest(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(MANIFEST_FIELDS)
        for r in rows:
            w.writerow([r.path, r.label, r.split])


# -- synthesis --------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Fixture parameters. Formants are (center Hz, bandwidth Hz, gain dB)."""

    sample_rate: int = 16000
    duration: float = 0.5
    pitch_range: tuple = (90.0, 220.0)
    formants: tuple = ((700.0, 80.0, 0.0), (1220.0, 100.0, 0.0), (2600.0, 120.0, 0.0))
    whisper_shift: float = 1.15
    whisper_widen: float = 1.8
    whisper_gain_db: float = -6.0
    pitch_jitter: float = 0.03
    amp_jitter: float = 0.2
    peak: float = 0.5
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.pitch_range
        if not 0 < lo <= hi:
            raise ValueError("pitch range must be positive and ordered")
        if not self.formants:
            raise ValueError("at least one formant required")
        if hi >= min(f[0] for f in self.formants):
            raise ValueError("pitch range must lie below the first formant")
        if self.whisper_shift <= 1 or self.whisper_widen <= 1:
            raise ValueError("whisper shift and widening factors must exceed 1")
        if not 0 <= self.pitch_jitter < 1 or not 0 <= self.amp_jitter < 1:
            raise ValueError("jitter fractions must lie in [0, 1)")
        if self.duration <= 0 or self.sample_rate <= 0:
            raise ValueError("duration and sample rate must be positive")
        if max(f[0] for f in self.formants) * self.whisper_shift >= self.sample_rate / 2:
            raise ValueError("shifted formants must stay below Nyquist")

    @property
    def n_samples(self):
        return int(round(self.duration * self.sample_rate))

    def with_seed(self, seed):
        return SynthConfig(**{**self.__dict__, "seed": seed})


def resonator_coeffs(center, bandwidth, fs):
    """Digital formant resonator with unit gain at DC.

    ``y[n] = A x[n] + B y[n-1] + C y[n-2]``, returned as ``lfilter`` (b, a).
    """
    T = 1.0 / fs
    C = -np.exp(-2 * np.pi * bandwidth * T)
    B = 2 * np.exp(-np.pi * bandwidth * T) * np.cos(2 * np.pi * center * T)
    A = 1.0 - B - C
    return np.array([A]), np.array([1.0, -B, -C])


def _cascade(source, formants, fs):
    y = source
    for center, bw, gain_db in formants:
        b, a = resonator_coeffs(center, bw, fs)
        y = lfilter(b * 10.0 ** (gain_db / 20.0), a, y)
    return y


def _level(rng, cfg, base_peak):
    return base_peak * (1.0 - cfg.amp_jitter * rng.random())


def _normalize(y, peak):
    m = np.max(np.abs(y))
    return y * (peak / m) if m > 0 else y


def pitch_for(cfg: SynthConfig) -> float:
    """Mean pitch (Hz) that :func:`synth_normal` uses for ``cfg.seed``."""
    rng = _rng(cfg.seed, "normal")
    lo, hi = cfg.pitch_range
    return float(lo + (hi - lo) * rng.random())


def _rng(seed, label):
    return np.random.Generator(np.random.PCG64(derive_seed(seed, label)))


def synth_normal(cfg: SynthConfig) -> AudioBuffer:
    """Jittered impulse train through the formant cascade, peak-normalized."""
    rng = _rng(cfg.seed, "normal")
    lo, hi = cfg.pitch_range
    f0 = lo + (hi - lo) * rng.random()
    n = cfg.n_samples
    period = cfg.sample_rate / f0
    src = np.zeros(n)
    t = rng.random() * period
    while t < n:
        src[int(t)] = 1.0
        t += period * (1.0 + cfg.pitch_jitter * (2.0 * rng.random() - 1.0))
    y = _cascade(src, cfg.formants, cfg.sample_rate)
    return AudioBuffer(_normalize(y, _level(rng, cfg, cfg.peak)), cfg.sample_rate)


def whisper_formants(cfg: SynthConfig):
    # the level drop is applied to the output peak, not per stage
    return tuple((c * cfg.whisper_shift, b * cfg.whisper_widen, g) for c, b, g in cfg.formants)


def synth_whisper(cfg: SynthConfig) -> AudioBuffer:
    """White noise through the shifted/widened cascade; peak lowered by the gain."""
    rng = _rng(cfg.seed, "whisper")
    src = rng.standard_normal(cfg.n_samples)
    y = _cascade(src, whisper_formants(cfg), cfg.sample_rate)
    peak = cfg.peak * 10.0 ** (cfg.whisper_gain_db / 20.0)
    return AudioBuffer(_normalize(y, _level(rng, cfg, peak)), cfg.sample_rate)


def build_synthetic_corpus(n_per_class_train, n_per_class_test, cfg: SynthConfig,
                           out_dir) -> str:
    """Write paired normal/whisper WAVs and ``manifest.csv``; return the manifest path.

    Pair ``i`` of split ``s`` uses seed ``derive_seed(cfg.seed, s, i)`` for both
    of its members.
    """
    if n_per_class_train <= 0 or n_per_class_test <= 0:
        raise ValueError("per-class counts must be positive")
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"{out_dir}: directory is not writable")
    rows = []
    for split, count in (("train", n_per_class_train), ("test", n_per_class_test)):
        for label in LABEL_NAMES:
            os.makedirs(os.path.join(out_dir, split, label), exist_ok=True)
        for i in range(count):
            pair_cfg = cfg.with_seed(derive_seed(cfg.seed, split, i))
            for label, synth in (("normal", synth_normal), ("whisper", synth_whisper)):
                rel = f"{split}/{label}/{split}_{i:05d}_{label}.wav"
                write_wav(os.path.join(out_dir, rel), synth(pair_cfg))
                rows.append(ManifestEntry(rel, label, split))
    manifest = os.path.join(out_dir, "manifest.csv")
    write_manifest(manifest, rows)
    return manifest
