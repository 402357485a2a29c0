# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loops in _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, fabs, M_PI

cnp.import_array()

cdef enum:
    AFFINE = 0
    PUSH = 1


cdef inline Py_ssize_t _find(const double[::1] breaks, Py_ssize_t npieces, double x) nogil:
    # last piece whose left end is <= x (clamped), same rule as searchsorted(side="right") - 1
    cdef Py_ssize_t lo = 0, hi = npieces, mid
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if breaks[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline double _apply(const double[::1] breaks, const int[::1] kinds,
                          const double[:, ::1] coef, Py_ssize_t npieces, double x) nogil:
    cdef Py_ssize_t i = _find(breaks, npieces, x)
    cdef double u, r, s
    if kinds[i] == PUSH:
        u = coef[i, 0] * x + coef[i, 1]
        r = fabs(u)
        s = 1.0 if u > 0 else (-1.0 if u < 0 else 0.0)
        return coef[i, 3] * (coef[i, 2] * s * (r + 0.1 * sin(2.0 * M_PI * r))) + coef[i, 4]
    return coef[i, 0] * x + coef[i, 1]


def apply_flat(breaks, kinds, coef, xs):
    cdef const double[::1] b = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const int[::1] kd = np.ascontiguousarray(kinds, dtype=np.intc)
    cdef const double[:, ::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef double[::1] x = np.array(xs, dtype=np.float64)
    cdef Py_ssize_t npieces = kd.shape[0], j
    with nogil:
        for j in range(x.shape[0]):
            x[j] = _apply(b, kd, c, npieces, x[j])
    return np.asarray(x)


def iterate_flat(breaks, kinds, coef, x0, int n):
    cdef const double[::1] b = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef const int[::1] kd = np.ascontiguousarray(kinds, dtype=np.intc)
    cdef const double[:, ::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[::1] start = np.ascontiguousarray(x0, dtype=np.float64)
    cdef Py_ssize_t S = start.shape[0], npieces = kd.shape[0], j, t
    out_arr = np.empty((S, n + 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double x
    with nogil:
        for j in range(S):
            x = start[j]
            out[j, 0] = x
            for t in range(n):
                x = _apply(b, kd, c, npieces, x)
                out[j, t + 1] = x
    return out_arr


def separated_count(orbits, double eps, int k):
    cdef const double[:, ::1] o = np.ascontiguousarray(orbits, dtype=np.float64)
    cdef Py_ssize_t S = o.shape[0], i, j, t, nk = 0
    if k > o.shape[1]:
        k = o.shape[1]
    kept_arr = np.empty(S, dtype=np.intp)
    cdef Py_ssize_t[::1] kept = kept_arr
    cdef bint far
    cdef double d
    with nogil:
        for i in range(S):
            far = True
            for j in range(nk):
                # row i is too close to kept row j if every coordinate is within eps
                far = False
                for t in range(k):
                    d = fabs(o[i, t] - o[kept[j], t])
                    if d > eps:
                        far = True
                        break
                if not far:
                    break
            if far:
                kept[nk] = i
                nk += 1
    return nk
