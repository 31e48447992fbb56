"""Binary model files.

Layout, all little-endian::

    4s   magic "QCM1"
    9I   input_bins, conv1_filters, conv1_kernel, conv2_filters, conv2_kernel,
         pool_size, dense_hidden, classes, padding (0 = valid, 1 = same)
    I d  checkpoint epoch, validation loss
    I    n normalization bins (0 = none)
    n d  per-bin mean, then n d per-bin std
    f4   every tensor in declaration order (conv1_w, conv1_b, conv2_w, conv2_b,
         dense1_w, dense1_b, out_w, out_b), row-major
"""
from __future__ import annotations

import os
import struct

import numpy as np

from ..features import NormStats
from .network import PADDINGS, PARAM_NAMES, ModelConfig, ModelParams
from .training import Model

MAGIC = b"QCM1"
_CONFIG = struct.Struct("<4s9I")
_META = struct.Struct("<IdI")
_CONFIG_FIELDS = ("input_bins", "conv1_filters", "conv1_kernel", "conv2_filters",
                  "conv2_kernel", "pool_size", "dense_hidden", "classes")


class ModelFormatError(ValueError):
    pass


def encode_model(model: Model) -> bytes:
    cfg = model.config
    model.params.check(cfg)
    parts = [_CONFIG.pack(MAGIC, *(getattr(cfg, f) for f in _CONFIG_FIELDS),
                          PADDINGS.index(cfg.padding))]
    norm = model.norm
    n = 0 if norm is None else norm.mean.shape[0]
    parts.append(_META.pack(model.epoch, model.val_loss, n))
    if n:
        parts.append(np.asarray(norm.mean, "<f8").tobytes())
        parts.append(np.asarray(norm.std, "<f8").tobytes())
    for _, t in model.params.tensors():
        parts.append(np.ascontiguousarray(t, "<f4").tobytes())
    return b"".join(parts)


def decode_model(blob: bytes, source="<bytes>") -> Model:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise ModelFormatError(f"{source}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    head = _CONFIG.size + _META.size
    if len(blob) < head:
        raise ModelFormatError(
            f"{source}: truncated header (expected {head} bytes, got {len(blob)})")
    vals = _CONFIG.unpack_from(blob)[1:]
    if vals[-1] >= len(PADDINGS):
        raise ModelFormatError(f"{source}: unknown padding code {vals[-1]}")
    try:
        cfg = ModelConfig(**dict(zip(_CONFIG_FIELDS, vals[:-1])), padding=PADDINGS[vals[-1]])
    except ValueError as exc:
        raise ModelFormatError(f"{source}: invalid model config ({exc})") from None
    epoch, val_loss, n = _META.unpack_from(blob, _CONFIG.size)
    shapes = cfg.shapes()
    expected = head + 16 * n + 4 * sum(int(np.prod(s)) for s in shapes.values())
    if len(blob) != expected:
        raise ModelFormatError(
            f"{source}: size mismatch (expected {expected} bytes, got {len(blob)})")
    pos = head
    norm = None
    if n:
        mean = np.frombuffer(blob, "<f8", n, pos).astype(np.float64)
        std = np.frombuffer(blob, "<f8", n, pos + 8 * n).astype(np.float64)
        pos += 16 * n
        norm = NormStats(mean, std)
    tensors = {}
    for name in PARAM_NAMES:
        shape = shapes[name]
        count = int(np.prod(shape))
        tensors[name] = np.frombuffer(blob, "<f4", count, pos).reshape(shape).astype(np.float32)
        pos += 4 * count
    return Model(cfg, ModelParams(**tensors), norm, epoch, val_loss)


def save_model(path, model: Model) -> None:
    with open(path, "wb") as f:
        f.write(encode_model(model))


def load_model(path) -> Model:
    with open(path, "rb") as f:
        model = decode_model(f.read(), os.fspath(path))
    model.name = os.path.basename(os.fspath(path))
    return model
