# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; see ``_fallback`` for the reference implementations."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, sin, cos, ceil, M_PI
from scipy.special.cython_special cimport j0, j1

cnp.import_array()

_XREF, _WREF = np.polynomial.legendre.leggauss(32)

DEF _SMALL_K = 0.5
SMALL_K = _SMALL_K


cdef inline double _profile(double s, double lam) nogil:
    cdef double a, b, z
    s = fabs(s)
    if s <= 1.0:
        return 1.0
    if s >= 2.0:
        return 0.0
    a = 2.0 - s
    b = s - 1.0
    z = lam * (1.0 / b - 1.0 / a)
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    return exp(z) / (1.0 + exp(z))


cdef inline double _profile_derivative(double s, double lam) nogil:
    cdef double a, b, z, e
    s = fabs(s)
    if s <= 1.0 or s >= 2.0:
        return 0.0
    a = 2.0 - s
    b = s - 1.0
    z = lam * (1.0 / b - 1.0 / a)
    e = exp(-fabs(z))
    return -lam * e / ((1.0 + e) * (1.0 + e)) * (1.0 / (a * a) + 1.0 / (b * b))


def smooth_profile(s, double lam=1.0):
    cdef cnp.ndarray[double, ndim=1] flat = np.abs(np.asarray(s, dtype=float)).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _profile(flat[i], lam)
    return out.reshape(np.shape(s))


def smooth_profile_derivative(s, double lam=1.0):
    cdef cnp.ndarray[double, ndim=1] flat = np.abs(np.asarray(s, dtype=float)).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _profile_derivative(flat[i], lam)
    return out.reshape(np.shape(s))


cdef inline double _ball3(double k) nogil:
    cdef double q = k * k
    if fabs(k) < 0.2:
        return 1.0 / 3.0 - q * (1.0 / 30.0 - q * (1.0 / 840.0 - q * (1.0 / 45360.0 - q / 3991680.0)))
    return (sin(k) - k * cos(k)) / (k * q)


def ball3(k):
    cdef cnp.ndarray[double, ndim=1] flat = np.asarray(k, dtype=float).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _ball3(flat[i])
    return out.reshape(np.shape(k))


cdef double _transform_one(double k, int n, double lam,
                           double[:] xref, double[:] wref) nogil:
    cdef int panels = <int>ceil(k / 4.0)
    cdef int p, j, m = xref.shape[0]
    cdef double h, mid, r, w, kr, f, acc = 0.0, inner, area
    if panels < 8:
        panels = 8
    h = 0.5 / panels
    if n == 1:
        area = 2.0
    elif n == 2:
        area = 2.0 * M_PI
    else:
        area = 4.0 * M_PI
    if k < _SMALL_K:
        for p in range(panels):
            mid = 1.0 + (2 * p + 1) * h
            for j in range(m):
                r = mid + h * xref[j]
                w = h * wref[j]
                f = _profile(r, lam)
                kr = k * r
                if k == 0.0:
                    acc += w * f * r ** (n - 1)
                elif n == 1:
                    acc += w * f * cos(kr)
                elif n == 2:
                    acc += w * f * r * j0(kr)
                else:
                    acc += w * f * r * r * sin(kr) / kr
        if k == 0.0:
            inner = 1.0 if n == 1 else (0.5 if n == 2 else 1.0 / 3.0)
        elif n == 1:
            inner = sin(k) / k
        elif n == 2:
            inner = j1(k) / k
        else:
            inner = _ball3(k)
        return area * (inner + acc)
    for p in range(panels):
        mid = 1.0 + (2 * p + 1) * h
        for j in range(m):
            r = mid + h * xref[j]
            w = h * wref[j] * _profile_derivative(r, lam)
            kr = k * r
            if n == 1:
                acc += w * sin(kr)
            elif n == 2:
                acc += w * r * j1(kr)
            else:
                acc += w * (sin(kr) - kr * cos(kr))
    if n == 1:
        return -2.0 / k * acc
    if n == 2:
        return -2.0 * M_PI / k * acc
    return -4.0 * M_PI / (k * k * k) * acc


def smooth_fourier(k, int n, double lam=1.0):
    cdef cnp.ndarray[double, ndim=1] flat = np.abs(np.asarray(k, dtype=float)).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(flat)
    cdef double[:] xref = _XREF
    cdef double[:] wref = _WREF
    cdef Py_ssize_t i
    with nogil:
        for i in range(flat.shape[0]):
            out[i] = _transform_one(flat[i], n, lam, xref, wref)
    return out.reshape(np.shape(k))


def branch_sum(base, x, jp, jm, t):
    """sum_i base_i * (jp_i exp(-i x_i t) + jm_i exp(+i x_i t)) for each t."""
    bb = np.asarray(base, dtype=float)
    jp = np.asarray(jp, dtype=complex)
    jm = np.asarray(jm, dtype=complex)
    # p e^{-i ph} + q e^{i ph} = (p + q) cos ph - i (p - q) sin ph
    cdef double complex[:] a = np.ascontiguousarray(bb * (jp + jm))
    cdef double complex[:] d = np.ascontiguousarray(bb * (jp - jm))
    cdef double[:] xx = np.ascontiguousarray(x, dtype=float)
    cdef double[:] tt = np.ascontiguousarray(np.atleast_1d(t), dtype=float)
    cdef cnp.ndarray[double complex, ndim=1] out = np.empty(tt.shape[0], dtype=complex)
    cdef double complex[:] o = out
    cdef Py_ssize_t i, s
    cdef double ph, c, sn, re, im
    with nogil:
        for s in range(tt.shape[0]):
            re = 0.0
            im = 0.0
            for i in range(xx.shape[0]):
                ph = xx[i] * tt[s]
                c = cos(ph)
                sn = sin(ph)
                re = re + a[i].real * c + d[i].imag * sn
                im = im + a[i].imag * c - d[i].real * sn
            o[s].real = re
            o[s].imag = im
    return out
