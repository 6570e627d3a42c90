# Compiled pairwise kernel primitives. Mirrors gpstack/backends/pure.py;
# the win over numpy is fusing the distance accumulation with the
# transcendental transform in one pass, with no (n, m) temporaries.

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sin, sqrt

cnp.import_array()

NAME = "compiled"


def _as_2d(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def pairwise_sqdist(xa, xb):
    cdef double[:, ::1] a = _as_2d(xa)
    cdef double[:, ::1] b = _as_2d(xb)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    out_arr = np.empty((a.shape[0], b.shape[0]))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double s, d
    with nogil:
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                s = 0.0
                for k in range(a.shape[1]):
                    d = a[i, k] - b[j, k]
                    s += d * d
                out[i, j] = s
    return out_arr


def pairwise_dist(xa, xb):
    cdef double[:, ::1] a = _as_2d(xa)
    cdef double[:, ::1] b = _as_2d(xb)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    out_arr = np.empty((a.shape[0], b.shape[0]))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double s, d
    with nogil:
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                s = 0.0
                for k in range(a.shape[1]):
                    d = a[i, k] - b[j, k]
                    s += d * d
                out[i, j] = sqrt(s)
    return out_arr


def se_gram(xa, xb, double variance, double lengthscale):
    cdef double[:, ::1] a = _as_2d(xa)
    cdef double[:, ::1] b = _as_2d(xb)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    out_arr = np.empty((a.shape[0], b.shape[0]))
    cdef double[:, ::1] out = out_arr
    cdef double scale = -0.5 / (lengthscale * lengthscale)
    cdef Py_ssize_t i, j, k
    cdef double s, d
    with nogil:
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                s = 0.0
                for k in range(a.shape[1]):
                    d = a[i, k] - b[j, k]
                    s += d * d
                out[i, j] = variance * exp(s * scale)
    return out_arr


def periodic_gram(xa, xb, double variance, double lengthscale, double period):
    cdef double[:, ::1] a = _as_2d(xa)
    cdef double[:, ::1] b = _as_2d(xb)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    out_arr = np.empty((a.shape[0], b.shape[0]))
    cdef double[:, ::1] out = out_arr
    cdef double pi_over_p = np.pi / period
    cdef double scale = -2.0 / (lengthscale * lengthscale)
    cdef Py_ssize_t i, j, k
    cdef double s, d
    with nogil:
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                s = 0.0
                for k in range(a.shape[1]):
                    d = a[i, k] - b[j, k]
                    s += d * d
                s = sin(sqrt(s) * pi_over_p)
                out[i, j] = variance * exp(s * s * scale)
    return out_arr
