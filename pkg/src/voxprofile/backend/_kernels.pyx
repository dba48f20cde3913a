# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: matmul, fused dense forward/backward, Adam update.

Mirrors ops_py; activation codes 0 identity, 1 tanh, 2 relu, 3 softplus.
Reductions accumulate in plain loop order, so results can differ from the
BLAS-backed fallback in the last bits.
"""

import numpy as np

from libc.math cimport exp, log1p, sqrt, tanh


IDENTITY = 0
TANH = 1
RELU = 2
SOFTPLUS = 3


cdef double _TINY = 2.2250738585072014e-308  # smallest normal float64


cdef inline double _softplus(double x) nogil:
    cdef double r
    if x > 0.0:
        return x + log1p(exp(-x))
    r = log1p(exp(x))
    return r if r > 0.0 else _TINY


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _act(double x, int act) nogil:
    if act == 1:
        return tanh(x)
    if act == 2:
        return x if x > 0.0 else 0.0
    if act == 3:
        return _softplus(x)
    return x


cdef inline double _act_grad(double pre, double y, int act) nogil:
    if act == 1:
        return 1.0 - y * y
    if act == 2:
        return 1.0 if pre > 0.0 else 0.0
    if act == 3:
        return _sigmoid(pre)
    return 1.0


def matmul(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t k = a.shape[1]
    cdef Py_ssize_t n = b.shape[1]
    if b.shape[0] != k:
        raise ValueError(
            f"matmul inner dims differ: ({a.shape[0]}, {a.shape[1]}) x ({b.shape[0]}, {b.shape[1]})"
        )
    out = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] c = out
    cdef Py_ssize_t i, j, p
    cdef double aip
    with nogil:
        for i in range(m):
            for p in range(k):
                aip = a[i, p]
                for j in range(n):
                    c[i, j] += aip * b[p, j]
    return out


def dense_forward(double[:, ::1] x, double[:, ::1] w, double[::1] b, int act):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t din = x.shape[1]
    cdef Py_ssize_t dout = w.shape[0]
    if w.shape[1] != din or b.shape[0] != dout:
        raise ValueError(
            f"dense_forward shapes inconsistent: x({n}, {din}) w({dout}, {w.shape[1]}) b({b.shape[0]},)"
        )
    y_arr = np.empty((n, dout), dtype=np.float64)
    pre_arr = np.empty((n, dout), dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] pre = pre_arr
    cdef Py_ssize_t i, o, d
    cdef Py_ssize_t d4 = din - (din & 3)
    cdef double acc, a0, a1, a2, a3
    with nogil:
        for i in range(n):
            for o in range(dout):
                # four partial sums break the serial dependency chain;
                # the combination order is fixed, so results are deterministic
                a0 = 0.0
                a1 = 0.0
                a2 = 0.0
                a3 = 0.0
                for d in range(0, d4, 4):
                    a0 += x[i, d] * w[o, d]
                    a1 += x[i, d + 1] * w[o, d + 1]
                    a2 += x[i, d + 2] * w[o, d + 2]
                    a3 += x[i, d + 3] * w[o, d + 3]
                for d in range(d4, din):
                    a0 += x[i, d] * w[o, d]
                acc = b[o] + ((a0 + a1) + (a2 + a3))
                pre[i, o] = acc
                y[i, o] = _act(acc, act)
    return y_arr, pre_arr


def dense_backward(double[:, ::1] x, double[:, ::1] w, double[:, ::1] pre,
                   double[:, ::1] y, int act, double[:, ::1] dy):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t din = x.shape[1]
    cdef Py_ssize_t dout = w.shape[0]
    if dy.shape[0] != n or dy.shape[1] != dout:
        raise ValueError(
            f"dense_backward upstream shape ({dy.shape[0]}, {dy.shape[1]}) != ({n}, {dout})"
        )
    dx_arr = np.zeros((n, din), dtype=np.float64)
    dw_arr = np.zeros((dout, din), dtype=np.float64)
    db_arr = np.zeros(dout, dtype=np.float64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t i, o, d
    cdef double g
    with nogil:
        for i in range(n):
            for o in range(dout):
                g = dy[i, o] * _act_grad(pre[i, o], y[i, o], act)
                db[o] += g
                for d in range(din):
                    dx[i, d] += g * w[o, d]
                    dw[o, d] += g * x[i, d]
    return dx_arr, dw_arr, db_arr


def adam_step(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
              double lr, double beta1, double beta2, double eps,
              double bc1, double bc2):
    cdef Py_ssize_t i
    cdef Py_ssize_t n = p.shape[0]
    with nogil:
        for i in range(n):
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i])
            p[i] = p[i] - lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
