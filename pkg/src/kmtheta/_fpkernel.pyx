# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Fincke-Pohst enumeration kernels.

Both kernels take the upper Cholesky factor R of the majorant (M = R^T R),
a bound and a real offset c, and visit every integer y with
(y + c)^T M (y + c) <= bound, last coordinate outermost.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, ceil, floor
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map

cnp.import_array()


cdef inline void _setup(double[:, ::1] R, double[::1] diag2, double[:, ::1] mu, Py_ssize_t k):
    cdef Py_ssize_t i, j
    for i in range(k):
        diag2[i] = R[i, i] * R[i, i]
        for j in range(k):
            mu[i, j] = R[i, j] / R[i, i] if j > i else 0.0


def enumerate_ball(double[:, ::1] R, double bound, double[::1] center, long long limit=-1):
    """Integer vectors y with Q(y + center) <= bound, as a (count, k) int64 array."""
    cdef Py_ssize_t k = R.shape[0]
    cdef double[::1] diag2 = np.empty(k)
    cdef double[:, ::1] mu = np.zeros((k, k))
    cdef double[::1] rem = np.empty(k + 1)
    cdef double[::1] z = np.zeros(k)
    cdef double[::1] s = np.zeros(k)
    cdef long long[::1] y = np.zeros(k, dtype=np.int64)
    cdef long long[::1] hi = np.zeros(k, dtype=np.int64)
    cdef vector[long long] out
    cdef Py_ssize_t i, j
    cdef double t, r, d
    cdef long long count = 0
    _setup(R, diag2, mu, k)
    rem[k] = bound
    i = k - 1
    # open level i: compute its centre and range
    t = 0.0
    s[i] = 0.0
    r = sqrt(rem[i + 1] / diag2[i]) if rem[i + 1] > 0 else 0.0
    y[i] = <long long>ceil(s[i] - center[i] - r)
    hi[i] = <long long>floor(s[i] - center[i] + r)
    while True:
        if y[i] > hi[i]:
            i += 1
            if i == k:
                break
            y[i] += 1
            continue
        z[i] = y[i] + center[i]
        d = z[i] - s[i]
        rem[i] = rem[i + 1] - diag2[i] * d * d
        if rem[i] < 0:
            y[i] += 1
            continue
        if i == 0:
            for j in range(k):
                out.push_back(y[j])
            count += 1
            if limit >= 0 and count > limit:
                raise OverflowError("enumeration limit exceeded")
            y[i] += 1
            continue
        i -= 1
        t = 0.0
        for j in range(i + 1, k):
            t -= mu[i, j] * z[j]
        s[i] = t
        r = sqrt(rem[i + 1] / diag2[i]) if rem[i + 1] > 0 else 0.0
        y[i] = <long long>ceil(s[i] - center[i] - r)
        hi[i] = <long long>floor(s[i] - center[i] + r)
    arr = np.empty((count, k), dtype=np.int64)
    cdef long long[:, ::1] view = arr
    cdef Py_ssize_t p
    for p in range(count):
        for j in range(k):
            view[p, j] = out[p * k + j]
    return arr


def histogram_ball(double[:, ::1] R, double bound, long long[:, ::1] gram_int):
    """Counts of y^T gram_int y over integer y with y^T M y <= bound (centre 0)."""
    cdef Py_ssize_t k = R.shape[0]
    cdef double[::1] diag2 = np.empty(k)
    cdef double[:, ::1] mu = np.zeros((k, k))
    cdef double[::1] rem = np.empty(k + 1)
    cdef double[::1] s = np.zeros(k)
    cdef long long[::1] y = np.zeros(k, dtype=np.int64)
    cdef long long[::1] hi = np.zeros(k, dtype=np.int64)
    # partial exact value: part[i] = sum_{a,b >= i} y_a G_ab y_b
    cdef long long[::1] part = np.zeros(k + 1, dtype=np.int64)
    cdef unordered_map[long long, long long] counts
    cdef Py_ssize_t i, j
    cdef double t, r, d
    cdef long long cross
    _setup(R, diag2, mu, k)
    rem[k] = bound
    part[k] = 0
    i = k - 1
    s[i] = 0.0
    r = sqrt(rem[i + 1] / diag2[i]) if rem[i + 1] > 0 else 0.0
    y[i] = <long long>ceil(-r)
    hi[i] = <long long>floor(r)
    while True:
        if y[i] > hi[i]:
            i += 1
            if i == k:
                break
            y[i] += 1
            continue
        d = y[i] - s[i]
        rem[i] = rem[i + 1] - diag2[i] * d * d
        if rem[i] < 0:
            y[i] += 1
            continue
        cross = 0
        for j in range(i + 1, k):
            cross += gram_int[i, j] * y[j]
        part[i] = part[i + 1] + y[i] * (gram_int[i, i] * y[i] + 2 * cross)
        if i == 0:
            counts[part[0]] += 1
            y[i] += 1
            continue
        i -= 1
        t = 0.0
        for j in range(i + 1, k):
            t -= mu[i, j] * y[j]
        s[i] = t
        r = sqrt(rem[i + 1] / diag2[i]) if rem[i + 1] > 0 else 0.0
        y[i] = <long long>ceil(s[i] - r)
        hi[i] = <long long>floor(s[i] + r)
    return dict(counts)
