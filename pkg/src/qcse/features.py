"""Log-magnitude spectrograms and the quartered (chirp) spectral envelope."""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .chirp import ChirpConfig, chirp_spectrum, log_magnitude
from .signal_io import AudioBuffer, FrameConfig, frame_signal

QSE, QCSE = "QSE", "QCSE"
KIND_CODES = {QSE: 0, QCSE: 1}
NORM_STD_FLOOR = 1e-6

FEATURE_MAGIC = b"QCSE"
FEATURE_VERSION = 1
_HEADER = struct.Struct("<4sBBdII")


class FeatureFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Spectrogram:
    data: np.ndarray  # (frames, K) in dB
    sample_rate: int
    hop: int

    @property
    def bin_count(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class FeatureMatrix:
    data: np.ndarray  # (frames, K/4)
    feature_kind: str
    radius: float

    def __post_init__(self):
        if self.feature_kind not in KIND_CODES:
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")
        if self.data.ndim != 2:
            raise ValueError("feature data must be 2-D (frames, bins)")

    @property
    def n_frames(self):
        return self.data.shape[0]

    @property
    def n_bins(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean and std must be matching 1-D arrays")
        if np.any(self.std < NORM_STD_FLOOR):
            raise ValueError(f"std below floor {NORM_STD_FLOOR}")

    @classmethod
    def identity(cls, n_bins):
        return cls(np.zeros(n_bins), np.ones(n_bins))


def kind_for_radius(radius):
    return QSE if radius == 1.0 else QCSE


def spectrogram(buf: AudioBuffer, fcfg: FrameConfig, ccfg: ChirpConfig) -> Spectrogram:
    frames = frame_signal(buf, fcfg)
    spec = chirp_spectrum(frames.rows, ccfg)
    return Spectrogram(log_magnitude(spec), buf.sample_rate, fcfg.hop)


def quarter(spec: Spectrogram, radius: float = 1.0) -> FeatureMatrix:
    """Keep the lowest K/4 bins (0 .. K/4-1) of every frame, values untouched."""
    K = spec.bin_count
    if K % 4:
        raise ValueError(f"bin count {K} is not divisible by 4")
    return FeatureMatrix(spec.data[:, : K // 4].copy(), kind_for_radius(radius), float(radius))


def extract(buf: AudioBuffer, fcfg: FrameConfig, ccfg: ChirpConfig) -> FeatureMatrix:
    """QSE when the radius is exactly 1, QCSE otherwise."""
    return quarter(spectrogram(buf, fcfg, ccfg), ccfg.radius)


def fit_norm(features) -> NormStats:
    """Per-bin mean and standard deviation over every frame of every matrix."""
    mats = [f.data if isinstance(f, FeatureMatrix) else np.asarray(f) for f in features]
    if not mats:
        raise ValueError("cannot fit normalization on an empty collection")
    widths = {m.shape[1] for m in mats}
    if len(widths) != 1:
        raise ValueError(f"feature matrices disagree on bin count: {sorted(widths)}")
    stacked = np.concatenate(mats, axis=0).astype(np.float64)
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), NORM_STD_FLOOR)
    return NormStats(mean, std)


def _check_bins(f, s):
    if f.n_bins != s.mean.shape[0]:
        raise ValueError(f"feature has {f.n_bins} bins, stats have {s.mean.shape[0]}")


def apply_norm(f: FeatureMatrix, s: NormStats) -> FeatureMatrix:
    _check_bins(f, s)
    return FeatureMatrix((f.data - s.mean) / s.std, f.feature_kind, f.radius)


def invert_norm(f: FeatureMatrix, s: NormStats) -> FeatureMatrix:
    _check_bins(f, s)
    return FeatureMatrix(f.data * s.std + s.mean, f.feature_kind, f.radius)


# -- feature files ----------------------------------------------------------

def encode_features(f: FeatureMatrix) -> bytes:
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, KIND_CODES[f.feature_kind],
                          f.radius, f.n_frames, f.n_bins)
    return header + np.ascontiguousarray(f.data, dtype="<f4").tobytes()


def decode_features(blob: bytes, source="<bytes>") -> FeatureMatrix:
    if len(blob) < _HEADER.size:
        raise FeatureFormatError(
            f"{source}: truncated header (expected {_HEADER.size} bytes, got {len(blob)})")
    magic, version, kind, radius, n_frames, n_bins = _HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise FeatureFormatError(f"{source}: bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    if version != FEATURE_VERSION:
        raise FeatureFormatError(f"{source}: unsupported version {version}")
    kinds = {v: k for k, v in KIND_CODES.items()}
    if kind not in kinds:
        raise FeatureFormatError(f"{source}: unknown feature kind code {kind}")
    expected = _HEADER.size + 4 * n_frames * n_bins
    if len(blob) != expected:
        raise FeatureFormatError(
            f"{source}: payload size mismatch (expected {expected} bytes, got {len(blob)})")
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n_frames, n_bins)
    return FeatureMatrix(data.astype(np.float32), kinds[kind], radius)


def write_features(path, f: FeatureMatrix) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_features(f))


def read_features(path) -> FeatureMatrix:
    with open(path, "rb") as fh:
        return decode_features(fh.read(), os.fspath(path))
