# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops with the same semantics as ``_pykernels`` (results agree to roundoff)."""

import numpy as np

from libc.math cimport sqrt

NAME = "cython"


cdef inline void _matvec(const double[:, ::1] M, const double[::1] v, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(M.shape[0]):
        acc = 0.0
        for j in range(M.shape[1]):
            acc = acc + M[i, j] * v[j]
        out[i] = acc


def propagate(A, B, x0, U):
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t n_steps = u.shape[0]
    X_arr = np.empty((n_steps + 1, n))
    cdef double[:, ::1] X = X_arr
    tmp_arr = np.empty(n)
    bu_arr = np.empty(n)
    cdef double[::1] tmp = tmp_arr
    cdef double[::1] bu = bu_arr
    cdef Py_ssize_t k, i
    X_arr[0] = x0
    with nogil:
        for k in range(n_steps):
            _matvec(a, X[k], tmp)
            _matvec(b, u[k], bu)
            for i in range(n):
                X[k + 1, i] = tmp[i] + bu[i]
    return X_arr


def endurance(A, B, x0, demand, aux, motors, double t_max, double gamma, double h,
              double guard, bint throttled, bint stop_on_overheat):
    cdef const double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    Bm_arr = np.ascontiguousarray(np.asarray(B, dtype=np.float64)[:, np.asarray(motors, dtype=np.intp)])
    cdef const double[:, ::1] bm = Bm_arr
    cdef const double[:, ::1] dem = np.ascontiguousarray(demand, dtype=np.float64)
    base_arr = np.ascontiguousarray(np.asarray(B, dtype=np.float64) @ np.asarray(aux, dtype=np.float64))
    cdef const double[::1] base = base_arr
    cdef const Py_ssize_t[::1] mot = np.ascontiguousarray(motors, dtype=np.intp)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t nm = mot.shape[0]
    cdef Py_ssize_t n_ticks = dem.shape[0]
    X_arr = np.empty((n_ticks + 1, n))
    scales_arr = np.ones(n_ticks)
    cdef double[:, ::1] X = X_arr
    cdef double[::1] scales = scales_arr
    ax_arr = np.empty(n)
    bd_arr = np.empty(n)
    cdef double[::1] ax = ax_arr
    cdef double[::1] bd = bd_arr
    cdef double limit = t_max - guard
    cdef double s, s2, d, T, ratio, free, acc
    cdef Py_ssize_t k, r, i, j, n_done = n_ticks
    cdef bint hot

    X_arr[0] = x0
    if stop_on_overheat:
        for r in range(nm):
            if X[0, mot[r]] >= t_max:
                return X_arr[:1], scales_arr[:0], 0

    with nogil:
        for k in range(n_ticks):
            _matvec(bm, dem[k], bd)
            _matvec(a, X[k], ax)
            s = 1.0
            if throttled:
                s2 = 1.0
                for r in range(nm):
                    d = bd[mot[r]]
                    if d <= 0.0:
                        continue
                    T = X[k, mot[r]]
                    free = ax[mot[r]] + base[mot[r]]
                    ratio = (gamma * (limit - T) * h - (free - T)) / d
                    if ratio < s2:
                        s2 = ratio
                if s2 <= 0.0:
                    s = 0.0
                elif s2 < 1.0:
                    s = sqrt(s2)
            scales[k] = s
            for i in range(n):
                X[k + 1, i] = ax[i] + base[i] + (s * s) * bd[i]
            if stop_on_overheat:
                hot = False
                for r in range(nm):
                    if X[k + 1, mot[r]] >= t_max:
                        hot = True
                if hot:
                    n_done = k + 1
                    break
    return X_arr[: n_done + 1], scales_arr[:n_done], n_done
