# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled hot loops for the 1D-CNN: sliding windows, their adjoint, max pooling.

Every routine accumulates in the same order as ``_fallback`` so both backends
produce bit-identical results.
"""
import numpy as np

cdef extern from *:
    """
    #if defined(__SSE__) || defined(_M_X64) || defined(_M_AMD64)
    #include <xmmintrin.h>
    #define QCSE_HAVE_CSR 1
    static unsigned int qcse_get_csr(void) { return _mm_getcsr(); }
    static void qcse_set_csr(unsigned int v) { _mm_setcsr(v); }
    #else
    #define QCSE_HAVE_CSR 0
    static unsigned int qcse_get_csr(void) { return 0; }
    static void qcse_set_csr(unsigned int v) { (void)v; }
    #endif
    """
    int QCSE_HAVE_CSR
    unsigned int qcse_get_csr()
    void qcse_set_csr(unsigned int v)

# MXCSR flush-to-zero (bit 15) and denormals-are-zero (bit 6)
cdef unsigned int FTZ_DAZ = 0x8040

HAVE_FLUSH_CONTROL = bool(QCSE_HAVE_CSR)


def get_flush_denormal():
    return bool(qcse_get_csr() & FTZ_DAZ) if QCSE_HAVE_CSR else False


def set_flush_denormal(bint on):
    """Toggle FTZ/DAZ for the calling thread; return the previous state."""
    cdef unsigned int csr = qcse_get_csr()
    prev = bool(csr & FTZ_DAZ)
    if QCSE_HAVE_CSR:
        qcse_set_csr((csr | FTZ_DAZ) if on else (csr & ~FTZ_DAZ))
    return prev


ctypedef fused real:
    float
    double


def im2col(real[:, :, ::1] x, Py_ssize_t k):
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t Lout = L - k + 1
    if Lout < 1:
        raise ValueError(f"kernel {k} longer than input {L}")
    dtype = np.float32 if real is float else np.float64
    out = np.empty((B, Lout, k, C), dtype=dtype)
    cdef real[:, :, :, ::1] o = out
    cdef Py_ssize_t b, t, j, c
    with nogil:
        for b in range(B):
            for t in range(Lout):
                for j in range(k):
                    for c in range(C):
                        o[b, t, j, c] = x[b, t + j, c]
    return out


def col2im(real[:, :, :, ::1] cols, Py_ssize_t length):
    cdef Py_ssize_t B = cols.shape[0], Lout = cols.shape[1]
    cdef Py_ssize_t k = cols.shape[2], C = cols.shape[3]
    if Lout + k - 1 != length:
        raise ValueError("window geometry does not match length")
    dtype = np.float32 if real is float else np.float64
    out = np.zeros((B, length, C), dtype=dtype)
    cdef real[:, :, ::1] o = out
    cdef Py_ssize_t b, t, j, c
    with nogil:
        for b in range(B):
            for j in range(k):
                for t in range(Lout):
                    for c in range(C):
                        o[b, t + j, c] += cols[b, t, j, c]
    return out


def maxpool(real[:, :, ::1] x, Py_ssize_t pool):
    cdef Py_ssize_t B = x.shape[0], L = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t Lp = L // pool
    dtype = np.float32 if real is float else np.float64
    out = np.empty((B, Lp, C), dtype=dtype)
    arg = np.empty((B, Lp, C), dtype=np.intp)
    cdef real[:, :, ::1] o = out
    cdef Py_ssize_t[:, :, ::1] a = arg
    cdef Py_ssize_t b, t, q, c, best_q
    cdef real best, v
    with nogil:
        for b in range(B):
            for t in range(Lp):
                for c in range(C):
                    best = x[b, t * pool, c]
                    best_q = 0
                    for q in range(1, pool):
                        v = x[b, t * pool + q, c]
                        if v > best:
                            best = v
                            best_q = q
                    o[b, t, c] = best
                    a[b, t, c] = best_q
    return out, arg


def maxpool_backward(real[:, :, ::1] dout, Py_ssize_t[:, :, ::1] arg,
                     Py_ssize_t pool, Py_ssize_t length):
    cdef Py_ssize_t B = dout.shape[0], Lp = dout.shape[1], C = dout.shape[2]
    dtype = np.float32 if real is float else np.float64
    dx = np.zeros((B, length, C), dtype=dtype)
    cdef real[:, :, ::1] d = dx
    cdef Py_ssize_t b, t, c
    with nogil:
        for b in range(B):
            for t in range(Lp):
                for c in range(C):
                    d[b, t * pool + arg[b, t, c], c] = dout[b, t, c]
    return dx
