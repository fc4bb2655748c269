# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the routines in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs, fmin, fmax, hypot, M_PI

cnp.import_array()


def pair_transition_sum(prev_xy, coef, cur_xy, double u, double sigma):
    cdef const double[:, ::1] P = np.ascontiguousarray(prev_xy, dtype=np.float64)
    cdef const double[::1] C = np.ascontiguousarray(coef, dtype=np.float64)
    cdef const double[:, ::1] X = np.ascontiguousarray(cur_xy, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], n = P.shape[0], i, j
    out = np.empty(m)
    cdef double[::1] O = out
    cdef double norm = 1.0 / (sqrt(2.0 * M_PI) * sigma)
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef double acc, d, dx, dy, x0, x1
    with nogil:
        for j in range(m):
            x0 = X[j, 0]
            x1 = X[j, 1]
            acc = 0.0
            for i in range(n):
                dx = x0 - P[i, 0]
                dy = x1 - P[i, 1]
                d = sqrt(dx * dx + dy * dy) - u
                acc += C[i] * exp(-d * d * inv)
            O[j] = acc * norm
    return out


cdef double _side_integral(double a, double q, double qend, double u, double sigma,
                           const double[::1] nodes, const double[::1] weights) nogil:
    cdef double total = 0.0, step, nxt, half, mid, qq, r, f, dr
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef Py_ssize_t k, nn = nodes.shape[0]
    while q < qend:
        if a > 0.0:
            step = fmin(sigma, hypot(q, a))
        else:
            step = sigma
        nxt = fmin(q + step, qend)
        half = 0.5 * (nxt - q)
        mid = 0.5 * (nxt + q)
        f = 0.0
        for k in range(nn):
            qq = mid + half * nodes[k]
            r = sqrt(a * a + qq * qq)
            dr = r - u
            f += weights[k] * exp(-dr * dr * inv)
        total += half * f
        q = nxt
    return total


def transition_mass(centers, seg_start, seg_dir, seg_len, double u, double sigma,
                    nodes, weights, double span=8.0):
    cdef const double[:, ::1] Cn = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 2)
    cdef const double[:, ::1] S = np.ascontiguousarray(seg_start, dtype=np.float64)
    cdef const double[:, ::1] D = np.ascontiguousarray(seg_dir, dtype=np.float64)
    cdef const double[::1] L = np.ascontiguousarray(seg_len, dtype=np.float64)
    cdef const double[::1] nd = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t m = Cn.shape[0], ns = S.shape[0], i, k
    out = np.zeros(m)
    cdef double[::1] O = out
    cdef double norm = 1.0 / (sqrt(2.0 * M_PI) * sigma)
    cdef double r_out = u + span * sigma, r_in = u - span * sigma
    cdef double dx, dy, t0, a, ho, hi, q1, q2, acc
    with nogil:
        for i in range(m):
            acc = 0.0
            for k in range(ns):
                dx = Cn[i, 0] - S[k, 0]
                dy = Cn[i, 1] - S[k, 1]
                t0 = dx * D[k, 0] + dy * D[k, 1]
                a = fabs(dx * D[k, 1] - dy * D[k, 0])
                if a > r_out:
                    continue
                ho = sqrt(fmax(r_out * r_out - a * a, 0.0))
                hi = sqrt(fmax(r_in * r_in - a * a, 0.0)) if r_in > a else 0.0
                if a < 1e-9 * sigma:
                    a = 0.0
                q1 = fmax(hi, -t0)
                q2 = fmin(ho, L[k] - t0)
                if q2 > q1:
                    acc += _side_integral(a, q1, q2, u, sigma, nd, wt)
                q1 = fmax(hi, t0 - L[k])
                q2 = fmin(ho, t0)
                if q2 > q1:
                    acc += _side_integral(a, q1, q2, u, sigma, nd, wt)
            O[i] = acc * norm
    return out


def polyline_distance(points, verts):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    cdef const double[:, ::1] V = np.ascontiguousarray(verts, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t m = P.shape[0], n = V.shape[0], i, k
    out = np.empty(m)
    cdef double[::1] O = out
    cdef double best, d, sx, sy, ll, t, px, py
    with nogil:
        for i in range(m):
            px = P[i, 0]
            py = P[i, 1]
            best = hypot(px - V[0, 0], py - V[0, 1])
            for k in range(n - 1):
                sx = V[k + 1, 0] - V[k, 0]
                sy = V[k + 1, 1] - V[k, 1]
                ll = sx * sx + sy * sy
                t = 0.0
                if ll > 0.0:
                    t = ((px - V[k, 0]) * sx + (py - V[k, 1]) * sy) / ll
                    t = fmin(fmax(t, 0.0), 1.0)
                d = hypot(px - V[k, 0] - t * sx, py - V[k, 1] - t * sy)
                if d < best:
                    best = d
            O[i] = best
    return out
