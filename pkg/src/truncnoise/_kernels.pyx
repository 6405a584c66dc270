# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: the sigmoid stack and the bucket convolution.

Every routine here has a numpy twin in ``_fallback`` with identical semantics.
"""
import numpy as np

from libc.math cimport exp, fabs

# sigma(z) == 1.0 exactly above this (exp(-37) < 2**-53)
cdef double SAT_HI = 37.0
# exp(-z) overflows to inf below this, so sigma(z) == 0.0 exactly
cdef double SAT_LO = -710.0


def stack_forward(const double[::1] x, double a, const double[::1] b,
                  const double[::1] f, double slope):
    cdef Py_ssize_t n = x.shape[0], k = b.shape[0], i, j
    cdef double a2 = a * a, acc, z, xi
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] s = out
    b2_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] b2 = b2_arr
    with nogil:
        for j in range(k):
            b2[j] = b[j] * b[j]
        for i in range(n):
            acc = 0.0
            xi = x[i]
            for j in range(k):
                z = slope * (xi - f[j])
                if z > SAT_HI:
                    acc = acc + b2[j]
                elif z >= SAT_LO:
                    acc = acc + b2[j] * (1.0 / (1.0 + exp(-z)))
            s[i] = a2 + acc
    return out


def stack_backward(const double[::1] x, double a, const double[::1] b,
                   const double[::1] f, double slope, const double[::1] gs):
    cdef Py_ssize_t n = x.shape[0], k = b.shape[0], i, j
    cdef double total = 0.0, sb, sd, z, e, fj, one_e
    gb_arr = np.empty(k, dtype=np.float64)
    gf_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] gb = gb_arr
    cdef double[::1] gf = gf_arr
    with nogil:
        for i in range(n):
            total += gs[i]
        for j in range(k):
            sb = 0.0
            sd = 0.0
            fj = f[j]
            for i in range(n):
                z = slope * (x[i] - fj)
                if z > SAT_HI:
                    sb = sb + gs[i]
                elif z >= SAT_LO:
                    e = exp(-z)
                    sb = sb + gs[i] * (1.0 / (1.0 + e))
                    # sigma'(z) is even in z; exp(-|z|) cannot overflow
                    e = exp(-fabs(z))
                    one_e = 1.0 + e
                    sd = sd + gs[i] * (e / (one_e * one_e))
            gb[j] = 2.0 * b[j] * sb
            gf[j] = -slope * b[j] * b[j] * sd
    return 2.0 * a * total, gb_arr, gf_arr


def conv_full(const double[::1] a, const double[::1] b):
    """Full linear convolution; each output sums its products in ascending index of ``a``."""
    cdef Py_ssize_t la = a.shape[0], lb = b.shape[0], i, k, p, q
    out_arr = np.zeros(la + lb - 1, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double ai
    nza_arr = np.flatnonzero(np.asarray(a)).astype(np.intp)
    nzb_arr = np.flatnonzero(np.asarray(b)).astype(np.intp)
    cdef Py_ssize_t[::1] nza = nza_arr
    cdef Py_ssize_t[::1] nzb = nzb_arr
    cdef Py_ssize_t ma = nza.shape[0], mb = nzb.shape[0]
    with nogil:
        if 4 * ma * mb < la * lb:
            for p in range(ma):
                i = nza[p]
                ai = a[i]
                for q in range(mb):
                    k = nzb[q]
                    out[i + k] = out[i + k] + ai * b[k]
        else:
            for p in range(ma):
                i = nza[p]
                ai = a[i]
                for k in range(lb):
                    out[i + k] = out[i + k] + ai * b[k]
    return out_arr
