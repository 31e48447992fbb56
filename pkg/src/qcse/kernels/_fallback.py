"""Pure-numpy versions of the CNN hot loops.

Layouts are channels-last: activations are ``(batch, length, channels)`` and
im2col windows are ``(batch, out_length, kernel, channels)``.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def im2col(x, k):
    B, L, C = x.shape
    if L - k + 1 < 1:
        raise ValueError(f"kernel {k} longer than input {L}")
    # sliding_window_view puts the window axis last: (B, Lout, C, k)
    win = sliding_window_view(x, k, axis=1)
    return np.ascontiguousarray(win.transpose(0, 1, 3, 2))


def col2im(cols, length):
    B, Lout, k, C = cols.shape
    if Lout + k - 1 != length:
        raise ValueError("window geometry does not match length")
    out = np.zeros((B, length, C), dtype=cols.dtype)
    for j in range(k):
        out[:, j:j + Lout, :] += cols[:, :, j, :]
    return out


def maxpool(x, pool):
    B, L, C = x.shape
    Lp = L // pool
    blocks = x[:, :Lp * pool, :].reshape(B, Lp, pool, C)
    arg = blocks.argmax(axis=2)
    out = np.take_along_axis(blocks, arg[:, :, None, :], axis=2)[:, :, 0, :]
    return np.ascontiguousarray(out), arg.astype(np.intp)


def maxpool_backward(dout, arg, pool, length):
    B, Lp, C = dout.shape
    dx = np.zeros((B, Lp, pool, C), dtype=dout.dtype)
    np.put_along_axis(dx, arg[:, :, None, :], dout[:, :, None, :], axis=2)
    dx = dx.reshape(B, Lp * pool, C)
    if length > Lp * pool:
        dx = np.concatenate([dx, np.zeros((B, length - Lp * pool, C), dout.dtype)], axis=1)
    return dx
