"""Pure-numpy implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable;
both backends implement exactly the same contracts and are compared in
tests and in benchmarks/bench_kernels.py.
"""
from __future__ import annotations

import numpy as np


def sweep_power_flow(fbus, tbus, r, x, rated_p, rated_q, zip6, inj_p, inj_q,
                     root_vsq, root, tol, max_sweeps):
    """Backward/forward sweep on a radial feeder with ZIP loads.

    Branch arrays must be in topological order (parent branches first)
    and oriented root -> leaf.  All per-bus arrays have shape (n_bus, T),
    branch results (n_br, T).  Branch currents solve the exact per-branch
    quadratic so the converged state satisfies the DistFlow recursion to
    machine precision.

    Returns (v_sq, l, p_send, q_send, sweeps) with sweeps = -1 when the
    iteration failed to converge (collapse-adjacent operating point).
    """
    zp, ip_, pp, zq, iq, pq = zip6
    n_bus, horizon = rated_p.shape
    n_br = fbus.shape[0]
    v = np.repeat(root_vsq[None, :], n_bus, axis=0).astype(float)
    lcur = np.zeros((n_br, horizon))
    p_send = np.zeros((n_br, horizon))
    q_send = np.zeros((n_br, horizon))
    a2 = r * r + x * x

    for sweep in range(1, max_sweeps + 1):
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            return v, lcur, p_send, q_send, -1
        sq = np.sqrt(v)
        acc_p = rated_p * (zp * v + ip_ * sq + pp) - inj_p
        acc_q = rated_q * (zq * v + iq * sq + pq) - inj_q
        ok = True
        for br in range(n_br - 1, -1, -1):
            i, j = fbus[br], tbus[br]
            pr, qr = acc_p[j], acc_q[j]
            c0 = pr * pr + qr * qr
            if a2[br] == 0.0:
                lbr = c0 / v[i]
            else:
                b1 = 2.0 * (r[br] * pr + x[br] * qr) - v[i]
                disc = b1 * b1 - 4.0 * a2[br] * c0
                if np.any(disc < 0.0):
                    ok = False
                    break
                lbr = (-b1 - np.sqrt(disc)) / (2.0 * a2[br])
            lcur[br] = lbr
            p_send[br] = pr + r[br] * lbr
            q_send[br] = qr + x[br] * lbr
            acc_p[i] += p_send[br]
            acc_q[i] += q_send[br]
        if not ok:
            return v, lcur, p_send, q_send, -1
        delta = 0.0
        v[root] = root_vsq
        for br in range(n_br):
            i, j = fbus[br], tbus[br]
            vnew = v[i] - 2.0 * (r[br] * p_send[br] + x[br] * q_send[br]) + a2[br] * lcur[br]
            delta = max(delta, float(np.max(np.abs(vnew - v[j]))) if horizon else 0.0)
            v[j] = vnew
        if delta < tol:
            return v, lcur, p_send, q_send, sweep
    return v, lcur, p_send, q_send, -1


def soc_max_step(u, du):
    """Largest alpha per block keeping u + alpha*du inside the SOC.

    ``u`` and ``du`` have shape (k, d); u must be strictly interior.
    Entries are np.inf when the ray never leaves the cone.
    """
    u = np.asarray(u, dtype=float)
    du = np.asarray(du, dtype=float)
    a = du[:, 0] ** 2 - np.einsum("ij,ij->i", du[:, 1:], du[:, 1:])
    bh = u[:, 0] * du[:, 0] - np.einsum("ij,ij->i", u[:, 1:], du[:, 1:])
    c = u[:, 0] ** 2 - np.einsum("ij,ij->i", u[:, 1:], u[:, 1:])
    out = np.full(u.shape[0], np.inf)
    # boundary where (u0+a*d0)^2 = ||u1+a*d1||^2 with u0+a*d0 > 0
    lin = np.abs(a) < 1e-14
    neg = lin & (bh < 0.0)
    out[neg] = -0.5 * c[neg] / bh[neg]
    quad = ~lin
    disc = bh * bh - a * c
    has_root = quad & (disc >= 0.0)
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = (-bh - sq) / a
        r2 = (-bh + sq) / a
    lo = np.minimum(r1, r2)
    hi = np.maximum(r1, r2)
    cand = np.where(lo > 0.0, lo, np.where(hi > 0.0, hi, np.inf))
    out[has_root] = cand[has_root]
    # also must not cross u0 + alpha*d0 = 0
    d0neg = du[:, 0] < 0.0
    t0 = np.full(u.shape[0], np.inf)
    t0[d0neg] = -u[d0neg, 0] / du[d0neg, 0]
    return np.minimum(out, t0)


def nonneg_max_step(xv, dx):
    """Largest alpha keeping xv + alpha*dx >= 0 elementwise (scalar)."""
    mask = dx < 0.0
    if not np.any(mask):
        return np.inf
    return float(np.min(-xv[mask] / dx[mask]))
