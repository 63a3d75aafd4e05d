# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled catching-up kernels; see ``_kernels_py`` for the reference twin."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def sweep_ball(U, center, double radius, y_init):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(center, dtype=np.float64)
    cdef Py_ssize_t M = u.shape[0], d = u.shape[1], j, i
    cdef double[::1] y = np.array(y_init, dtype=np.float64)
    out_arr = np.empty((M, d))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] w = np.empty(d)
    cdef double nrm, s
    for j in range(M):
        nrm = 0.0
        for i in range(d):
            w[i] = u[j, i] - y[i] - c[i]
            nrm += w[i] * w[i]
        nrm = sqrt(nrm)
        if nrm > radius:
            s = radius / nrm
            for i in range(d):
                y[i] = u[j, i] - (c[i] + s * w[i])
        for i in range(d):
            out[j, i] = y[i]
    return out_arr


def sweep_box(U, lower, upper, y_init):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] hi = np.ascontiguousarray(upper, dtype=np.float64)
    cdef Py_ssize_t M = u.shape[0], d = u.shape[1], j, i
    cdef double[::1] y = np.array(y_init, dtype=np.float64)
    out_arr = np.empty((M, d))
    cdef double[:, ::1] out = out_arr
    cdef double x
    for j in range(M):
        for i in range(d):
            x = u[j, i] - y[i]
            if x < lo[i]:
                y[i] = u[j, i] - lo[i]
            elif x > hi[i]:
                y[i] = u[j, i] - hi[i]
            out[j, i] = y[i]
    return out_arr


def sweep_halfspace(U, normal, double offset, y_init):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[::1] n = np.ascontiguousarray(normal, dtype=np.float64)
    cdef Py_ssize_t M = u.shape[0], d = u.shape[1], j, i
    cdef double[::1] y = np.array(y_init, dtype=np.float64)
    out_arr = np.empty((M, d))
    cdef double[:, ::1] out = out_arr
    cdef double nn = 0.0, viol, s
    for i in range(d):
        nn += n[i] * n[i]
    for j in range(M):
        viol = -offset
        for i in range(d):
            viol += n[i] * (u[j, i] - y[i])
        if viol > 0.0:
            s = viol / nn
            for i in range(d):
                y[i] = u[j, i] - ((u[j, i] - y[i]) - s * n[i])
        for i in range(d):
            out[j, i] = y[i]
    return out_arr


cdef double _max_violation(const double[:, ::1] A, const double[::1] b, double[::1] x) nogil:
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], i, k
    cdef double v, worst = -1e300
    for i in range(m):
        v = -b[i]
        for k in range(d):
            v += A[i, k] * x[k]
        if v > worst:
            worst = v
    return worst


cdef int _dykstra(const double[:, ::1] A, const double[::1] b, double[::1] nn,
                  double[::1] x, double[:, ::1] incr, double[::1] z,
                  double tol, int max_iter) nogil:
    # x is overwritten with the projection; returns iterations or -1
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], i, k
    cdef int it
    cdef double viol, s, moved, step, xn
    if _max_violation(A, b, x) <= 0.0:
        return 0
    for i in range(m):
        for k in range(d):
            incr[i, k] = 0.0
    for it in range(1, max_iter + 1):
        moved = 0.0
        for i in range(m):
            viol = -b[i]
            for k in range(d):
                z[k] = x[k] + incr[i, k]
                viol += A[i, k] * z[k]
            if viol > 0.0:
                s = viol / nn[i]
            else:
                s = 0.0
            for k in range(d):
                xn = z[k] - s * A[i, k]
                incr[i, k] = z[k] - xn
                step = xn - x[k]
                moved += step * step
                x[k] = xn
        if sqrt(moved) <= tol and _max_violation(A, b, x) <= tol:
            return it
    return -1


def dykstra_halfspaces(x0, normals, offsets, double tol, int max_iter):
    cdef const double[:, ::1] A = np.ascontiguousarray(normals, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0], d = A.shape[1], i, k
    x_arr = np.array(x0, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] nn = np.zeros(m)
    for i in range(m):
        for k in range(d):
            nn[i] += A[i, k] * A[i, k]
    cdef double[:, ::1] incr = np.zeros((m, d))
    cdef double[::1] z = np.empty(d)
    cdef int it = _dykstra(A, b, nn, x, incr, z, tol, max_iter)
    return x_arr, it


def sweep_polyhedron(U, normals, offsets, y_init, double tol, int max_iter):
    cdef const double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef const double[:, ::1] A = np.ascontiguousarray(normals, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef Py_ssize_t M = u.shape[0], d = u.shape[1], m = A.shape[0], j, i, k
    cdef double[::1] y = np.array(y_init, dtype=np.float64)
    cdef double[::1] nn = np.zeros(m)
    for i in range(m):
        for k in range(d):
            nn[i] += A[i, k] * A[i, k]
    cdef double[:, ::1] incr = np.zeros((m, d))
    cdef double[::1] z = np.empty(d)
    cdef double[::1] x = np.empty(d)
    out_arr = np.empty((M, d))
    cdef double[:, ::1] out = out_arr
    cdef int it, worst = 0
    for j in range(M):
        for k in range(d):
            x[k] = u[j, k] - y[k]
        it = _dykstra(A, b, nn, x, incr, z, tol, max_iter)
        if it < 0:
            return out_arr, -1
        if it > worst:
            worst = it
        if it > 0:
            for k in range(d):
                y[k] = u[j, k] - x[k]
        for k in range(d):
            out[j, k] = y[k]
    return out_arr, worst
