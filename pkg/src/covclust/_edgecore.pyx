# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled edge kernels for the ADMM loop.

Semantics and array layout are documented in covclust._kernels_py; the two
backends must stay interchangeable.  The extension is built with floating
point contraction disabled so that the theta = 1/2 midpoint branch stores
bit-identical rows, the property cluster extraction relies on.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

NAME = "compiled"


def edge_aggregates(double[:, ::1] z, double[:, ::1] u,
                    cnp.int64_t[::1] tails, Py_ssize_t d):
    cdef Py_ssize_t rows = z.shape[0]
    cdef Py_ssize_t c = z.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q_up_arr = np.zeros((d, c))
    cdef double[:, ::1] q_up = q_up_arr
    cdef double q_all = 0.0, q
    cdef Py_ssize_t e, t, i
    for e in range(rows):
        i = tails[e]
        for t in range(c):
            q = z[e, t] + u[e, t]
            q_all += q * q
            q_up[i, t] += q
    return q_all, q_up_arr


def aux_update(double[:, ::1] bt, double[:, ::1] u,
               cnp.int64_t[::1] ei, cnp.int64_t[::1] ej, double[::1] w,
               double nu, double rho,
               double[:, ::1] z_out, double[::1] theta_out):
    cdef Py_ssize_t l = ei.shape[0]
    cdef Py_ssize_t c = bt.shape[1]
    cdef Py_ssize_t k, t, i, j
    cdef double av, bv, dv, h, raw, theta, mid
    for k in range(l):
        i = ei[k]
        j = ej[k]
        h = 0.0
        for t in range(c):
            av = bt[i, t] - u[k, t]
            bv = bt[j, t] - u[l + k, t]
            dv = av - bv
            h += dv * dv
        h = sqrt(h)
        if h == 0.0:
            theta = 0.5
        else:
            raw = 1.0 - (nu * w[k]) / (rho * h)
            theta = raw if raw > 0.5 else 0.5
        theta_out[k] = theta
        if theta == 0.5:
            for t in range(c):
                av = bt[i, t] - u[k, t]
                bv = bt[j, t] - u[l + k, t]
                mid = 0.5 * (av + bv)
                z_out[k, t] = mid
                z_out[l + k, t] = mid
        else:
            for t in range(c):
                av = bt[i, t] - u[k, t]
                bv = bt[j, t] - u[l + k, t]
                z_out[k, t] = theta * av + (1.0 - theta) * bv
                z_out[l + k, t] = (1.0 - theta) * av + theta * bv


def dual_update(double[:, ::1] u, double[:, ::1] z,
                double[:, ::1] bt, cnp.int64_t[::1] tails):
    cdef Py_ssize_t rows = z.shape[0]
    cdef Py_ssize_t c = z.shape[1]
    cdef Py_ssize_t e, t, i
    for e in range(rows):
        i = tails[e]
        for t in range(c):
            # (u + z) - bt, matching the numpy backend's two-pass
            # rounding so both produce identical duals.
            u[e, t] = (u[e, t] + z[e, t]) - bt[i, t]


def primal_residual_sq(double[:, ::1] z, double[:, ::1] bt,
                       cnp.int64_t[::1] tails):
    cdef Py_ssize_t rows = z.shape[0]
    cdef Py_ssize_t c = z.shape[1]
    cdef Py_ssize_t e, t, i
    cdef double acc = 0.0, r
    for e in range(rows):
        i = tails[e]
        for t in range(c):
            r = z[e, t] - bt[i, t]
            acc += r * r
    return acc


def diff_sq(double[:, ::1] z_new, double[:, ::1] z_old):
    cdef Py_ssize_t rows = z_new.shape[0]
    cdef Py_ssize_t c = z_new.shape[1]
    cdef Py_ssize_t e, t
    cdef double acc = 0.0, r
    for e in range(rows):
        for t in range(c):
            r = z_new[e, t] - z_old[e, t]
            acc += r * r
    return acc


def fused_mask(double[:, ::1] z):
    cdef Py_ssize_t l = z.shape[0] // 2
    cdef Py_ssize_t c = z.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, cast=True] out = \
        np.ones(l, dtype=bool)
    cdef Py_ssize_t k, t
    for k in range(l):
        for t in range(c):
            if z[k, t] != z[l + k, t]:
                out[k] = False
                break
    return out
