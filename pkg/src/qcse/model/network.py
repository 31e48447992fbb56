"""The two-stage 1D-CNN: parameters, forward pass and analytic gradients.

Activations are channels-last ``(batch, length, channels)``. Convolution
weights are stored ``(filters, in_channels, kernel)``. Flattening after the
second pool is position-major, so ``dense1_w`` row ``t * filters2 + c`` reads
pooled position ``t`` of channel ``c``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .. import kernels

PADDINGS = ("valid", "same")
PARAM_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b",
               "dense1_w", "dense1_b", "out_w", "out_b")


@dataclass(frozen=True)
class ModelConfig:
    input_bins: int = 128
    conv1_filters: int = 32
    conv1_kernel: int = 20
    conv2_filters: int = 64
    conv2_kernel: int = 10
    pool_size: int = 2
    dense_hidden: int = 1024
    classes: int = 2
    padding: str = "valid"

    def __post_init__(self):
        if self.padding not in PADDINGS:
            raise ValueError(f"padding must be one of {PADDINGS}")
        if self.classes != 2:
            raise ValueError("only two-class models are supported")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, int) and v <= 0:
                raise ValueError(f"{f.name} must be positive")
        self.lengths()  # validates kernel sizes against layer inputs

    def lengths(self):
        """Sequence lengths ``(conv1, pool1, conv2, pool2)``."""
        L = self.input_bins
        if self.padding == "valid":
            if self.conv1_kernel > L:
                raise ValueError(f"conv1 kernel {self.conv1_kernel} exceeds input {L}")
            c1 = L - self.conv1_kernel + 1
        else:
            c1 = L
        p1 = c1 // self.pool_size
        if self.padding == "valid":
            if self.conv2_kernel > p1:
                raise ValueError(f"conv2 kernel {self.conv2_kernel} exceeds its input {p1}")
            c2 = p1 - self.conv2_kernel + 1
        else:
            c2 = p1
        p2 = c2 // self.pool_size
        if p1 < 1 or p2 < 1:
            raise ValueError("pooling leaves an empty sequence")
        return c1, p1, c2, p2

    @property
    def flatten_dim(self):
        return self.lengths()[3] * self.conv2_filters

    def shapes(self):
        return {
            "conv1_w": (self.conv1_filters, 1, self.conv1_kernel),
            "conv1_b": (self.conv1_filters,),
            "conv2_w": (self.conv2_filters, self.conv1_filters, self.conv2_kernel),
            "conv2_b": (self.conv2_filters,),
            "dense1_w": (self.flatten_dim, self.dense_hidden),
            "dense1_b": (self.dense_hidden,),
            "out_w": (self.dense_hidden, self.classes),
            "out_b": (self.classes,),
        }

    def stages(self):
        """Human-readable layer list, in execution order."""
        c1, p1, c2, p2 = self.lengths()
        return [
            f"conv1d {self.conv1_filters}x k{self.conv1_kernel} ({self.padding}) -> {c1}",
            "relu",
            f"maxpool {self.pool_size} -> {p1}",
            f"conv1d {self.conv2_filters}x k{self.conv2_kernel} ({self.padding}) -> {c2}",
            "relu",
            f"maxpool {self.pool_size} -> {p2}",
            f"flatten -> {self.flatten_dim}",
            f"dense {self.dense_hidden}",
            "relu",
            f"dense {self.classes}",
            "softmax",
        ]


def param_count(cfg: ModelConfig) -> int:
    """Closed-form parameter count (weights + biases of all four layers)."""
    c1 = cfg.conv1_filters * (1 * cfg.conv1_kernel + 1)
    c2 = cfg.conv2_filters * (cfg.conv1_filters * cfg.conv2_kernel + 1)
    d1 = cfg.dense_hidden * (cfg.flatten_dim + 1)
    out = cfg.classes * (cfg.dense_hidden + 1)
    return c1 + c2 + d1 + out


@dataclass
class ModelParams:
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    dense1_w: np.ndarray
    dense1_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def tensors(self):
        return [(name, getattr(self, name)) for name in PARAM_NAMES]

    def copy(self):
        return ModelParams(*(t.copy() for _, t in self.tensors()))

    def astype(self, dtype):
        return ModelParams(*(t.astype(dtype) for _, t in self.tensors()))

    @property
    def dtype(self):
        return self.conv1_w.dtype

    def size(self):
        return sum(t.size for _, t in self.tensors())

    def check(self, cfg: ModelConfig):
        for name, shape in cfg.shapes().items():
            got = getattr(self, name).shape
            if got != shape:
                raise ValueError(f"{name} has shape {got}, config expects {shape}")
        for name, t in self.tensors():
            if not np.all(np.isfinite(t)):
                raise ValueError(f"{name} contains non-finite values")

    @classmethod
    def zeros(cls, cfg: ModelConfig, dtype=np.float32):
        return cls(**{k: np.zeros(s, dtype) for k, s in cfg.shapes().items()})


def init_params(cfg: ModelConfig, seed: int, dtype=np.float32) -> ModelParams:
    """He-uniform weights ``U(-sqrt(6/fan_in), +sqrt(6/fan_in))``, zero biases.

    Tensors are drawn in declaration order from one ``numpy`` PCG64 stream.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    out = {}
    for name, shape in cfg.shapes().items():
        if name.endswith("_b"):
            out[name] = np.zeros(shape, dtype)
            continue
        fan_in = int(np.prod(shape[1:])) if name.startswith("conv") else shape[0]
        bound = np.sqrt(6.0 / fan_in)
        out[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return ModelParams(**out)


# -- forward / backward ------------------------------------------------------

def _pad(x, k, padding):
    if padding == "valid":
        return x, 0
    left = (k - 1) // 2
    right = k - 1 - left
    return np.pad(x, ((0, 0), (left, right), (0, 0))), left


def _conv_matrix(w):
    # (F, C, K) -> (K*C, F) matching the im2col window layout (k-major, then channel)
    F, C, K = w.shape
    return w.transpose(2, 1, 0).reshape(K * C, F)


def _conv_forward(x, w, b, padding):
    F, C, K = w.shape
    xp, left = _pad(x, K, padding)
    cols = kernels.im2col(xp, K)
    B, Lout = cols.shape[:2]
    z = cols.reshape(B * Lout, K * C) @ _conv_matrix(w) + b
    return z.reshape(B, Lout, F), (cols, xp.shape[1], left, x.shape[1])


def _conv_backward(dz, w, cache, need_dx=True):
    cols, padded_len, left, in_len = cache
    F, C, K = w.shape
    B, Lout = dz.shape[:2]
    dz2 = dz.reshape(B * Lout, F)
    dw = (cols.reshape(B * Lout, K * C).T @ dz2).reshape(K, C, F).transpose(2, 1, 0)
    db = dz2.sum(axis=0)
    dx = None
    if need_dx:
        dcols = (dz2 @ _conv_matrix(w).T).reshape(B, Lout, K, C)
        dx = kernels.col2im(dcols, padded_len)[:, left:left + in_len, :]
    return np.ascontiguousarray(dw), db, dx


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(params: ModelParams, x, cfg: ModelConfig):
    x = np.asarray(x, dtype=params.dtype)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != cfg.input_bins:
        raise ValueError(f"expected frames of {cfg.input_bins} bins, got shape {x.shape}")
    B = x.shape[0]
    p = cfg.pool_size
    z1, c1 = _conv_forward(x[:, :, None], params.conv1_w, params.conv1_b, cfg.padding)
    a1 = np.maximum(z1, 0)
    p1, i1 = kernels.maxpool(a1, p)
    z2, c2 = _conv_forward(p1, params.conv2_w, params.conv2_b, cfg.padding)
    a2 = np.maximum(z2, 0)
    p2, i2 = kernels.maxpool(a2, p)
    flat = p2.reshape(B, -1)
    zh = flat @ params.dense1_w + params.dense1_b
    h = np.maximum(zh, 0)
    logits = h @ params.out_w + params.out_b
    cache = (z1, c1, i1, z2, c2, i2, p2.shape, flat, h)
    return logits, cache


def conv1_preactivation(params: ModelParams, x, cfg: ModelConfig):
    """First-layer outputs before the rectifier, ``(batch, length, filters)``."""
    x = np.atleast_2d(np.asarray(x, dtype=params.dtype))
    z1, _ = _conv_forward(x[:, :, None], params.conv1_w, params.conv1_b, cfg.padding)
    return z1


def forward(params: ModelParams, frames, cfg: ModelConfig) -> np.ndarray:
    """Class probabilities for one frame ``(bins,)`` or a batch ``(B, bins)``."""
    single = np.ndim(frames) == 1
    logits, _ = _forward(params, frames, cfg)
    probs = softmax(logits)
    return probs[0] if single else probs


def loss_and_grad(params: ModelParams, frames, labels, cfg: ModelConfig):
    """Mean cross-entropy over the batch and its gradient w.r.t. every tensor."""
    labels = np.asarray(labels, dtype=np.intp)
    frames = np.asarray(frames)
    if frames.ndim != 2 or len(frames) == 0:
        raise ValueError("batch must be a non-empty (B, bins) array")
    if labels.shape != (frames.shape[0],):
        raise ValueError("one label per frame required")
    if labels.min() < 0 or labels.max() >= cfg.classes:
        raise ValueError("label out of range")
    logits, cache = _forward(params, frames, cfg)
    z1, c1, i1, z2, c2, i2, p2_shape, flat, h = cache
    B = frames.shape[0]
    p = cfg.pool_size

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    rows = np.arange(B)
    loss = float(-log_probs[rows, labels].mean())

    dlogits = np.exp(log_probs)
    dlogits[rows, labels] -= 1
    dlogits /= B
    # flush subnormals: saturated softmax tails otherwise slow every matmul below ~5x
    dlogits[np.abs(dlogits) < np.finfo(dlogits.dtype).tiny] = 0

    g = {}
    g["out_w"] = h.T @ dlogits
    g["out_b"] = dlogits.sum(axis=0)
    dh = (dlogits @ params.out_w.T) * (h > 0)
    g["dense1_w"] = flat.T @ dh
    g["dense1_b"] = dh.sum(axis=0)
    dp2 = (dh @ params.dense1_w.T).reshape(p2_shape)
    da2 = kernels.maxpool_backward(dp2, i2, p, z2.shape[1])
    dz2 = da2 * (z2 > 0)
    g["conv2_w"], g["conv2_b"], dp1 = _conv_backward(dz2, params.conv2_w, c2)
    da1 = kernels.maxpool_backward(dp1, i1, p, z1.shape[1])
    dz1 = da1 * (z1 > 0)
    g["conv1_w"], g["conv1_b"], _ = _conv_backward(dz1, params.conv1_w, c1, need_dx=False)
    grads = ModelParams(**{k: g[k].astype(params.dtype, copy=False) for k in PARAM_NAMES})
    return loss, grads
