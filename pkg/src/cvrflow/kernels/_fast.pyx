# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see reference.py for contracts)."""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def sweep_power_flow(cnp.int64_t[:] fbus, cnp.int64_t[:] tbus,
                     double[:] r, double[:] x,
                     double[:, ::1] rated_p, double[:, ::1] rated_q,
                     zip6,
                     double[:, ::1] inj_p, double[:, ::1] inj_q,
                     double[:] root_vsq, Py_ssize_t root,
                     double tol, int max_sweeps):
    cdef double zp = zip6[0], ip_ = zip6[1], pp = zip6[2]
    cdef double zq = zip6[3], iq = zip6[4], pq = zip6[5]
    cdef Py_ssize_t n_bus = rated_p.shape[0]
    cdef Py_ssize_t horizon = rated_p.shape[1]
    cdef Py_ssize_t n_br = fbus.shape[0]

    v_np = np.empty((n_bus, horizon))
    l_np = np.zeros((n_br, horizon))
    ps_np = np.zeros((n_br, horizon))
    qs_np = np.zeros((n_br, horizon))
    accp_np = np.empty((n_bus, horizon))
    accq_np = np.empty((n_bus, horizon))
    cdef double[:, ::1] v = v_np
    cdef double[:, ::1] lcur = l_np
    cdef double[:, ::1] ps = ps_np
    cdef double[:, ::1] qs = qs_np
    cdef double[:, ::1] accp = accp_np
    cdef double[:, ::1] accq = accq_np

    cdef Py_ssize_t i, j, br, t
    cdef int sweep
    cdef double vi, sq, pr, qr, a2, b1, c0, disc, lbr, vnew, delta, vv

    for i in range(n_bus):
        for t in range(horizon):
            v[i, t] = root_vsq[t]

    for sweep in range(1, max_sweeps + 1):
        for i in range(n_bus):
            for t in range(horizon):
                vv = v[i, t]
                if vv <= 0.0 or vv != vv:
                    return v_np, l_np, ps_np, qs_np, -1
                sq = sqrt(vv)
                accp[i, t] = rated_p[i, t] * (zp * vv + ip_ * sq + pp) - inj_p[i, t]
                accq[i, t] = rated_q[i, t] * (zq * vv + iq * sq + pq) - inj_q[i, t]
        for br in range(n_br - 1, -1, -1):
            i = fbus[br]
            j = tbus[br]
            a2 = r[br] * r[br] + x[br] * x[br]
            for t in range(horizon):
                pr = accp[j, t]
                qr = accq[j, t]
                c0 = pr * pr + qr * qr
                if a2 == 0.0:
                    lbr = c0 / v[i, t]
                else:
                    b1 = 2.0 * (r[br] * pr + x[br] * qr) - v[i, t]
                    disc = b1 * b1 - 4.0 * a2 * c0
                    if disc < 0.0:
                        return v_np, l_np, ps_np, qs_np, -1
                    lbr = (-b1 - sqrt(disc)) / (2.0 * a2)
                lcur[br, t] = lbr
                ps[br, t] = pr + r[br] * lbr
                qs[br, t] = qr + x[br] * lbr
                accp[i, t] += ps[br, t]
                accq[i, t] += qs[br, t]
        delta = 0.0
        for t in range(horizon):
            v[root, t] = root_vsq[t]
        for br in range(n_br):
            i = fbus[br]
            j = tbus[br]
            a2 = r[br] * r[br] + x[br] * x[br]
            for t in range(horizon):
                vnew = v[i, t] - 2.0 * (r[br] * ps[br, t] + x[br] * qs[br, t]) + a2 * lcur[br, t]
                if fabs(vnew - v[j, t]) > delta:
                    delta = fabs(vnew - v[j, t])
                v[j, t] = vnew
        if delta < tol:
            return v_np, l_np, ps_np, qs_np, sweep
    return v_np, l_np, ps_np, qs_np, -1


def soc_max_step(double[:, ::1] u, double[:, ::1] du):
    cdef Py_ssize_t k = u.shape[0]
    cdef Py_ssize_t d = u.shape[1]
    out_np = np.empty(k)
    cdef double[:] out = out_np
    cdef Py_ssize_t blk, idx
    cdef double a, bh, c, disc, sq, r1, r2, lo, hi, alpha, t0
    cdef double inf = float("inf")
    for blk in range(k):
        a = du[blk, 0] * du[blk, 0]
        bh = u[blk, 0] * du[blk, 0]
        c = u[blk, 0] * u[blk, 0]
        for idx in range(1, d):
            a -= du[blk, idx] * du[blk, idx]
            bh -= u[blk, idx] * du[blk, idx]
            c -= u[blk, idx] * u[blk, idx]
        alpha = inf
        if fabs(a) < 1e-14:
            if bh < 0.0:
                alpha = -0.5 * c / bh
        else:
            disc = bh * bh - a * c
            if disc >= 0.0:
                sq = sqrt(disc)
                r1 = (-bh - sq) / a
                r2 = (-bh + sq) / a
                lo = r1 if r1 < r2 else r2
                hi = r2 if r1 < r2 else r1
                if lo > 0.0:
                    alpha = lo
                elif hi > 0.0:
                    alpha = hi
        if du[blk, 0] < 0.0:
            t0 = -u[blk, 0] / du[blk, 0]
            if t0 < alpha:
                alpha = t0
        out[blk] = alpha
    return out_np


def nonneg_max_step(double[:] xv, double[:] dx):
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t i
    cdef double best = float("inf")
    cdef double step
    for i in range(n):
        if dx[i] < 0.0:
            step = -xv[i] / dx[i]
            if step < best:
                best = step
    return best
