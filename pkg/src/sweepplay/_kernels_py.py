"""Pure-Python reference versions of the compiled kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Both walk the catching-up recursion

    y[j] = U[j] - P_Z(U[j] - y[j-1]),      y[-1] = y_init

over a sequence of input stations ``U`` (one row per station), i.e. each
step projects the previous state onto the translated-and-reflected set
``U[j] - Z``.
"""

from __future__ import annotations

import math

import numpy as np


def sweep_ball(U, center, radius, y_init):
    U = np.ascontiguousarray(U, dtype=float)
    M, d = U.shape
    c = [float(v) for v in center]
    r = float(radius)
    y = [float(v) for v in y_init]
    out = np.empty((M, d))
    for j in range(M):
        row = U[j]
        w = [row[i] - y[i] - c[i] for i in range(d)]
        nrm = math.sqrt(sum(v * v for v in w))
        if nrm > r:
            s = r / nrm
            y = [row[i] - (c[i] + s * w[i]) for i in range(d)]
        # inside: projection is the identity and y is unchanged
        out[j] = y
    return out


def sweep_box(U, lower, upper, y_init):
    U = np.ascontiguousarray(U, dtype=float)
    M, d = U.shape
    lo = [float(v) for v in lower]
    hi = [float(v) for v in upper]
    y = [float(v) for v in y_init]
    out = np.empty((M, d))
    for j in range(M):
        row = U[j]
        for i in range(d):
            x = row[i] - y[i]
            if x < lo[i]:
                y[i] = row[i] - lo[i]
            elif x > hi[i]:
                y[i] = row[i] - hi[i]
        out[j] = y
    return out


def sweep_halfspace(U, normal, offset, y_init):
    U = np.ascontiguousarray(U, dtype=float)
    M, d = U.shape
    n = [float(v) for v in normal]
    b = float(offset)
    nn = sum(v * v for v in n)
    y = [float(v) for v in y_init]
    out = np.empty((M, d))
    for j in range(M):
        row = U[j]
        x = [row[i] - y[i] for i in range(d)]
        viol = sum(n[i] * x[i] for i in range(d)) - b
        if viol > 0.0:
            s = viol / nn
            y = [row[i] - (x[i] - s * n[i]) for i in range(d)]
        out[j] = y
    return out


def dykstra_halfspaces(x0, normals, offsets, tol, max_iter):
    """Dykstra's algorithm for the projection onto ``{x : normals @ x <= offsets}``.

    Returns ``(point, iterations)``; ``iterations == -1`` signals that
    ``max_iter`` cycles were used up without meeting ``tol``.
    """
    A = np.asarray(normals, dtype=float)
    b = np.asarray(offsets, dtype=float)
    x = [float(v) for v in x0]
    m, d = A.shape
    rows = [[float(v) for v in A[i]] for i in range(m)]
    bs = [float(v) for v in b]
    nn = [sum(v * v for v in r) for r in rows]

    def max_violation(p):
        return max(sum(r[k] * p[k] for k in range(d)) - bi for r, bi in zip(rows, bs))

    if max_violation(x) <= 0.0:
        return np.array(x), 0
    incr = [[0.0] * d for _ in range(m)]
    for it in range(1, max_iter + 1):
        moved = 0.0
        for i in range(m):
            r = rows[i]
            z = [x[k] + incr[i][k] for k in range(d)]
            viol = sum(r[k] * z[k] for k in range(d)) - bs[i]
            if viol > 0.0:
                s = viol / nn[i]
                xn = [z[k] - s * r[k] for k in range(d)]
            else:
                xn = z
            incr[i] = [z[k] - xn[k] for k in range(d)]
            moved += sum((xn[k] - x[k]) ** 2 for k in range(d))
            x = xn
        if math.sqrt(moved) <= tol and max_violation(x) <= tol:
            return np.array(x), it
    return np.array(x), -1


def sweep_polyhedron(U, normals, offsets, y_init, tol, max_iter):
    U = np.ascontiguousarray(U, dtype=float)
    M, d = U.shape
    y = np.asarray(y_init, dtype=float).copy()
    out = np.empty((M, d))
    worst = 0
    for j in range(M):
        p, it = dykstra_halfspaces(U[j] - y, normals, offsets, tol, max_iter)
        if it < 0:
            return out, -1
        worst = max(worst, it)
        if it > 0:
            y = U[j] - p
        out[j] = y
    return out, worst
