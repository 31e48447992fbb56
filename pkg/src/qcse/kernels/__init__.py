"""Hot loops of the 1D-CNN with a compiled backend and a numpy fallback.

The backend is chosen once at import. Set ``QCSE_KERNELS`` to ``python`` to
force the numpy fallback, or ``compiled`` to fail loudly when the extension is
missing. The default (``auto``) prefers the compiled module when it imports.
"""
import contextlib
import importlib
import os

import numpy as np

from . import _fallback

_choice = os.environ.get("QCSE_KERNELS", "auto").lower()
if _choice not in ("auto", "python", "compiled"):
    raise ImportError(f"QCSE_KERNELS must be auto, python or compiled, not {_choice!r}")

_ext = None
if _choice != "python":
    try:
        _ext = importlib.import_module("._ext", __name__)
    except ImportError:
        if _choice == "compiled":
            raise

# finfo caches per dtype; compute before any flush-to-zero mode can skew it
np.finfo(np.float32), np.finfo(np.float64)

BACKEND = "compiled" if _ext is not None else "python"
_impl = _ext if _ext is not None else _fallback


def _contig(a):
    return a if a.flags.c_contiguous else np.ascontiguousarray(a)


def im2col(x, k):
    """Sliding windows of width ``k`` along axis 1 of ``(B, L, C)``."""
    return _impl.im2col(_contig(x), int(k))


def col2im(cols, length):
    """Adjoint of :func:`im2col`: scatter-add windows back to ``(B, length, C)``."""
    return _impl.col2im(_contig(cols), int(length))


def maxpool(x, pool):
    """Non-overlapping max pool along axis 1; trailing remainder is dropped.

    Returns the pooled array and the in-window argmax (first maximum wins).
    """
    return _impl.maxpool(_contig(x), int(pool))


def maxpool_backward(dout, arg, pool, length):
    """Route pooled gradients to the argmax positions; everything else is zero."""
    return _impl.maxpool_backward(_contig(dout), _contig(arg.astype(np.intp, copy=False)),
                                  int(pool), int(length))


@contextlib.contextmanager
def flush_denormals():
    """Treat subnormal floats as zero on this thread while the block runs.

    Saturated softmax outputs push float32 gradients into the subnormal range,
    where x86 arithmetic slows several-fold. Only the compiled backend can set
    the control register; with the fallback this is a no-op, so results from
    the two backends can differ in the last bits once subnormals appear.
    """
    if _ext is None or not _ext.HAVE_FLUSH_CONTROL:
        yield False
        return
    prev = _ext.set_flush_denormal(True)
    try:
        yield True
    finally:
        _ext.set_flush_denormal(prev)


def backend_module(name):
    """Return the raw implementation module for ``name`` (for tests and benchmarks)."""
    if name == "python":
        return _fallback
    if name == "compiled":
        if _ext is None:
            raise ImportError("compiled kernels are not built")
        return _ext
    raise ValueError(name)
