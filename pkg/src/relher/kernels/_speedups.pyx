# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for relational message passing.

Same contracts as kernels._fallback: empty segments aggregate to 0 with
argmax -1; max ties keep the first row in row order.
"""

from libc.math cimport exp, log1p, tanh

import numpy as np

cimport cython
cimport numpy as cnp

ctypedef fused floating:
    float
    double


def scatter_max(floating[:, ::1] msgs, long long[::1] targets, Py_ssize_t n_segments):
    cdef Py_ssize_t m = msgs.shape[0]
    cdef Py_ssize_t k = msgs.shape[1]
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.full((n_segments, k), -np.inf, dtype=dtype)
    arg_arr = np.full((n_segments, k), -1, dtype=np.int64)
    cdef floating[:, ::1] out = out_arr
    cdef long long[:, ::1] arg = arg_arr
    cdef Py_ssize_t i, j, seg
    cdef floating v
    for i in range(m):
        seg = targets[i]
        for j in range(k):
            v = msgs[i, j]
            if v > out[seg, j]:
                out[seg, j] = v
                arg[seg, j] = i
    for seg in range(n_segments):
        for j in range(k):
            if arg[seg, j] < 0:
                out[seg, j] = 0.0
    return out_arr, arg_arr


def scatter_max_grad(floating[:, ::1] grad_out, long long[:, ::1] argmax,
                     Py_ssize_t n_rows):
    cdef Py_ssize_t n = grad_out.shape[0]
    cdef Py_ssize_t k = grad_out.shape[1]
    dtype = np.float32 if floating is float else np.float64
    grad_arr = np.zeros((n_rows, k), dtype=dtype)
    cdef floating[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, j
    cdef long long row
    for i in range(n):
        for j in range(k):
            row = argmax[i, j]
            if row >= 0:
                grad[row, j] += grad_out[i, j]
    return grad_arr


def segment_sum(floating[:, ::1] x, long long[::1] segments, Py_ssize_t n_segments):
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t k = x.shape[1]
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.zeros((n_segments, k), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, seg
    for i in range(m):
        seg = segments[i]
        for j in range(k):
            out[seg, j] += x[i, j]
    return out_arr


cdef inline double _softplus(double v) nogil:
    if v > 20.0:
        return v
    elif v < -20.0:
        return exp(v)
    return log1p(exp(v))


def mish(floating[:, ::1] x):
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t k = x.shape[1]
    dtype = np.float32 if floating is float else np.float64
    y_arr = np.empty((m, k), dtype=dtype)
    cdef floating[:, ::1] y = y_arr
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(m):
        for j in range(k):
            v = x[i, j]
            y[i, j] = <floating> (v * tanh(_softplus(v)))
    return y_arr


def mish_grad(floating[:, ::1] x, floating[:, ::1] grad_y):
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t k = x.shape[1]
    dtype = np.float32 if floating is float else np.float64
    g_arr = np.empty((m, k), dtype=dtype)
    cdef floating[:, ::1] g = g_arr
    cdef Py_ssize_t i, j
    cdef double v, t, sig
    for i in range(m):
        for j in range(k):
            v = x[i, j]
            t = tanh(_softplus(v))
            sig = 1.0 / (1.0 + exp(-v))
            g[i, j] = <floating> (grad_y[i, j] * (t + v * (1.0 - t * t) * sig))
    return g_arr
