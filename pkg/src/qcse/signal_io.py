"""Waveform ingestion, framing and windowing."""
from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 16000
WINDOWS = ("rectangular", "hamming", "hann")


class WavFormatError(ValueError):
    """The file is not a mono 16-bit PCM RIFF/WAVE file, or it is damaged."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono waveform; amplitudes nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"expected a 1-D waveform, got shape {samples.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains NaN or Inf")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class FrameConfig:
    """Short-time analysis geometry.

    ``sample_rate`` is the rate the pipeline accepts; buffers at any other rate
    are rejected rather than resampled. Set it to ``None`` to accept any rate.
    """

    frame_len: int = 1024
    hop: int = 256
    window: str = "hamming"
    sample_rate: int | None = DEFAULT_SAMPLE_RATE
    preemphasis: float = 0.0
    remove_dc: bool = False

    def __post_init__(self):
        if self.frame_len <= 0:
            raise ValueError("frame_len must be positive")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError("hop must satisfy 0 < hop <= frame_len")
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; choose from {WINDOWS}")
        if not 0.0 <= self.preemphasis < 1.0:
            raise ValueError("preemphasis coefficient must lie in [0, 1)")


@dataclass(frozen=True)
class FrameMatrix:
    rows: np.ndarray
    sample_rate: int
    hop: int = field(default=0)

    def __len__(self):
        return self.rows.shape[0]


def _find_chunks(data, path):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    chunks = {}
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if cid not in chunks:
            chunks[cid] = (body, size)
        pos = body + size + (size & 1)
    return chunks


def read_wav(path) -> AudioBuffer:
    """Read a mono 16-bit PCM WAV file, scaling samples by 1/32768.

    Chunks other than ``fmt `` and ``data`` are skipped wherever they appear.
    """
    path = os.fspath(path)
    with open(path, "rb") as f:
        data = f.read()
    chunks = _find_chunks(data, path)
    if b"fmt " not in chunks:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if b"data" not in chunks:
        raise WavFormatError(f"{path}: missing data chunk")

    fpos, fsize = chunks[b"fmt "]
    if fsize < 16 or fpos + 16 > len(data):
        raise WavFormatError(f"{path}: fmt chunk too short")
    fmt_tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", data, fpos)
    if fmt_tag == 0xFFFE and fsize >= 40:
        # WAVE_FORMAT_EXTENSIBLE: the real tag is the first two bytes of the sub-format GUID
        fmt_tag = struct.unpack_from("<H", data, fpos + 24)[0]
    if fmt_tag != 1:
        raise WavFormatError(f"{path}: unsupported encoding (format tag {fmt_tag}); need PCM")
    if bits != 16:
        raise WavFormatError(f"{path}: unsupported bit depth {bits}; need 16")
    if channels != 1:
        raise WavFormatError(f"{path}: {channels} channels; need mono")
    if rate <= 0:
        raise WavFormatError(f"{path}: invalid sample rate {rate}")

    dpos, dsize = chunks[b"data"]
    available = len(data) - dpos
    if dsize > available:
        raise WavFormatError(
            f"{path}: truncated data chunk (header says {dsize} bytes, {available} present)")
    if dsize % 2:
        raise WavFormatError(f"{path}: data chunk has odd byte count {dsize}")
    pcm = np.frombuffer(data, dtype="<i2", count=dsize // 2, offset=dpos)
    return AudioBuffer(pcm.astype(np.float64) / 32768.0, rate)


def write_wav(path, buf: AudioBuffer) -> int:
    """Write ``buf`` as mono 16-bit PCM and return the number of clipped samples.

    Values are clamped only at quantization; a warning is logged when any clip.
    """
    q = np.round(buf.samples * 32768.0)
    clipped = int(np.count_nonzero((q > 32767) | (q < -32768)))
    if clipped:
        log.warning("%s: %d samples clipped during 16-bit quantization", path, clipped)
    pcm = np.clip(q, -32768, 32767).astype("<i2").tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE",
        b"fmt ", 16, 1, 1, buf.sample_rate, buf.sample_rate * 2, 2, 16,
        b"data", len(pcm),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(pcm)
    return clipped


def make_window(kind: str, length: int) -> np.ndarray:
    """Periodic (DFT-even) window of ``length`` samples."""
    if length <= 0:
        raise ValueError("window length must be positive")
    n = np.arange(length)
    if kind == "rectangular":
        return np.ones(length)
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * n / length)
    if kind == "hamming":
        return 0.54 - 0.46 * np.cos(2 * np.pi * n / length)
    raise ValueError(f"unknown window {kind!r}")


def frame_count(length, frame_len, hop):
    if length < frame_len:
        return 0
    return (length - frame_len) // hop + 1


def frame_signal(buf: AudioBuffer, cfg: FrameConfig) -> FrameMatrix:
    """Cut ``buf`` into windowed frames starting every ``hop`` samples.

    Frames that would run past the end are dropped; nothing is zero-padded.
    """
    if cfg.sample_rate is not None and buf.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"sample rate {buf.sample_rate} Hz does not match the configured "
            f"{cfg.sample_rate} Hz (resampling is not supported)")
    x = buf.samples
    if cfg.remove_dc:
        x = x - x.mean()
    if cfg.preemphasis:
        x = np.concatenate([x[:1], x[1:] - cfg.preemphasis * x[:-1]])
    n = frame_count(len(x), cfg.frame_len, cfg.hop)
    if n == 0:
        raise ValueError(
            f"buffer of {len(x)} samples is shorter than one frame ({cfg.frame_len})")
    starts = np.arange(n) * cfg.hop
    rows = x[starts[:, None] + np.arange(cfg.frame_len)]
    if cfg.window != "rectangular":
        rows = rows * make_window(cfg.window, cfg.frame_len)
    return FrameMatrix(rows, buf.sample_rate, cfg.hop)
