# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the inner loops: pairwise distances, embedding
gradients, and the mini CNN's convolution/pooling passes.

Signature-compatible with psyman.kernels_py; psyman.backend picks one of
the two at import time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()

NAME = "compiled"

cdef double Q_FLOOR = 1e-12


def pairwise_sq_dists(object x_in):
    cdef const double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        out[i, i] = 0.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = x[i, k] - x[j, k]
                acc += diff * diff
            out[i, j] = acc
            out[j, i] = acc
    return out_arr


def tsne_forces(object p_in, object coords_in, bint want_kl):
    cdef const double[:, ::1] p = np.ascontiguousarray(p_in, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(coords_in, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0], d = y.shape[1]
    w_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] w = w_arr
    grad_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, total, q, coef, kl, pij
    total = 0.0
    for i in range(n):
        w[i, i] = 0.0
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = y[i, k] - y[j, k]
                acc += diff * diff
            acc = 1.0 / (1.0 + acc)
            w[i, j] = acc
            w[j, i] = acc
            total += 2.0 * acc
    kl = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            q = w[i, j] / total
            coef = 4.0 * (p[i, j] - q) * w[i, j]
            for k in range(d):
                grad[i, k] += coef * (y[i, k] - y[j, k])
            pij = p[i, j]
            if want_kl and pij > 0.0:
                if q < Q_FLOOR:
                    q = Q_FLOOR
                kl += pij * log(pij / q)
    return grad_arr, kl


def stress_forces(object ii_in, object jj_in, object dh_in, object coords_in):
    cdef const long long[::1] ii = np.ascontiguousarray(ii_in, dtype=np.int64)
    cdef const long long[::1] jj = np.ascontiguousarray(jj_in, dtype=np.int64)
    cdef const double[::1] dh = np.ascontiguousarray(dh_in, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(coords_in, dtype=np.float64)
    cdef Py_ssize_t m = ii.shape[0], d = y.shape[1]
    grad_arr = np.zeros((y.shape[0], d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t e, k, a, b
    cdef double acc, diff, dl, resid, factor, stress, c
    stress = 0.0
    for e in range(m):
        a = ii[e]
        b = jj[e]
        acc = 0.0
        for k in range(d):
            diff = y[a, k] - y[b, k]
            acc += diff * diff
        dl = sqrt(acc)
        resid = dh[e] - dl
        stress += resid * resid
        if dl > 0.0:
            factor = 2.0 * (dl - dh[e]) / dl
            for k in range(d):
                c = factor * (y[a, k] - y[b, k])
                grad[a, k] += c
                grad[b, k] -= c
    return grad_arr, stress


def conv2d_fwd(object x_in, object w_in, object b_in):
    cdef const double[:, :, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef const double[:, :, :, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t nb = x.shape[0], ci = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t co = w.shape[0]
    y_arr = np.empty((nb, co, h, wd), dtype=np.float64)
    cdef double[:, :, :, ::1] y = y_arr
    cdef Py_ssize_t ib, io, ic, r, c, p, q, rr, cc
    cdef double acc
    for ib in range(nb):
        for io in range(co):
            for r in range(h):
                for c in range(wd):
                    acc = b[io]
                    for ic in range(ci):
                        for p in range(3):
                            rr = r + p - 1
                            if rr < 0 or rr >= h:
                                continue
                            for q in range(3):
                                cc = c + q - 1
                                if cc < 0 or cc >= wd:
                                    continue
                                acc += x[ib, ic, rr, cc] * w[io, ic, p, q]
                    y[ib, io, r, c] = acc
    return y_arr


def conv2d_bwd(object x_in, object w_in, object dy_in):
    cdef const double[:, :, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef const double[:, :, :, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[:, :, :, ::1] dy = np.ascontiguousarray(dy_in, dtype=np.float64)
    cdef Py_ssize_t nb = x.shape[0], ci = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t co = w.shape[0]
    dx_arr = np.zeros((nb, ci, h, wd), dtype=np.float64)
    dw_arr = np.zeros((co, ci, 3, 3), dtype=np.float64)
    db_arr = np.zeros(co, dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t ib, io, ic, r, c, p, q, rr, cc
    cdef double g
    for ib in range(nb):
        for io in range(co):
            for r in range(h):
                for c in range(wd):
                    g = dy[ib, io, r, c]
                    db[io] += g
                    for ic in range(ci):
                        for p in range(3):
                            rr = r + p - 1
                            if rr < 0 or rr >= h:
                                continue
                            for q in range(3):
                                cc = c + q - 1
                                if cc < 0 or cc >= wd:
                                    continue
                                dw[io, ic, p, q] += x[ib, ic, rr, cc] * g
                                dx[ib, ic, rr, cc] += w[io, ic, p, q] * g
    return dx_arr, dw_arr, db_arr


def maxpool2_fwd(object x_in):
    cdef const double[:, :, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t nb = x.shape[0], ch = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t ho = h // 2, wo = wd // 2
    y_arr = np.empty((nb, ch, ho, wo), dtype=np.float64)
    arg_arr = np.empty((nb, ch, ho, wo), dtype=np.int64)
    cdef double[:, :, :, ::1] y = y_arr
    cdef long long[:, :, :, ::1] arg = arg_arr
    cdef Py_ssize_t ib, ic, r, c, p, q, best_idx
    cdef double v, best
    for ib in range(nb):
        for ic in range(ch):
            for r in range(ho):
                for c in range(wo):
                    best = x[ib, ic, 2 * r, 2 * c]
                    best_idx = 0
                    for p in range(2):
                        for q in range(2):
                            v = x[ib, ic, 2 * r + p, 2 * c + q]
                            if v > best:
                                best = v
                                best_idx = 2 * p + q
                    y[ib, ic, r, c] = best
                    arg[ib, ic, r, c] = best_idx
    return y_arr, arg_arr


def maxpool2_bwd(object arg_in, object dy_in, Py_ssize_t h, Py_ssize_t w):
    cdef const long long[:, :, :, ::1] arg = np.ascontiguousarray(arg_in, dtype=np.int64)
    cdef const double[:, :, :, ::1] dy = np.ascontiguousarray(dy_in, dtype=np.float64)
    cdef Py_ssize_t nb = dy.shape[0], ch = dy.shape[1], ho = dy.shape[2], wo = dy.shape[3]
    dx_arr = np.zeros((nb, ch, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    cdef Py_ssize_t ib, ic, r, c, idx
    for ib in range(nb):
        for ic in range(ch):
            for r in range(ho):
                for c in range(wo):
                    idx = arg[ib, ic, r, c]
                    dx[ib, ic, 2 * r + idx // 2, 2 * c + idx % 2] += dy[ib, ic, r, c]
    return dx_arr
