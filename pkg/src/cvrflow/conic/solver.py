"""Primal-dual interior-point solver for standard-form cone programs.

Algorithm: homogeneous self-dual embedding with Nesterov-Todd scaling
and Mehrotra predictor-corrector steps.  The embedding solves

    A'y + z - c*tau = 0,   Ax - b*tau = 0,   c'x - b'y + kappa = 0,
    x in K, z in K* (z = 0 on the free block), tau, kappa >= 0,

so infeasibility and unboundedness come out as certificates instead of
divergence.  Equality duals are reported with the convention that for a
row a'x = b_i the dual equals d(optimal value)/d(b_i).

Per iteration one sparse LU factorization of the (statically
regularized) reduced KKT system is reused for all right-hand sides,
with one round of iterative refinement against the unregularized
system.  Everything is deterministic: fixed iteration schedule, no
randomized pivoting.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .. import kernels
from .program import FREE, NONNEG, SOC, ConeProgram

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
NUMERICAL_FAILURE = "numerical-failure"


class SolverError(RuntimeError):
    pass


@dataclass
class SolveOptions:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200
    step_frac: float = 0.99
    static_reg: float = 1e-9
    refine_steps: int = 1
    verbose: bool = False


@dataclass
class ConeSolution:
    status: str
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    objective: float
    iterations: int
    info: dict = field(default_factory=dict)

    @property
    def primal(self) -> np.ndarray:
        return self.x

    @property
    def duals_eq(self) -> np.ndarray:
        return self.y


class _Cones:
    """Index bookkeeping plus batched Jordan/NT operations per cone group."""

    def __init__(self, prog: ConeProgram):
        free, nn = [], []
        socs: dict[int, list[np.ndarray]] = {}
        for blk in prog.blocks:
            idx = np.arange(blk.start, blk.stop)
            if blk.kind == FREE:
                free.append(idx)
            elif blk.kind == NONNEG:
                nn.append(idx)
            elif blk.kind == SOC:
                socs.setdefault(blk.dim, []).append(idx)
        self.free = np.concatenate(free) if free else np.empty(0, dtype=np.int64)
        self.nn = np.concatenate(nn) if nn else np.empty(0, dtype=np.int64)
        self.soc = {d: np.vstack(rows) for d, rows in socs.items()}
        self.n_soc = sum(v.shape[0] for v in self.soc.values())
        self.degree = self.nn.size + self.n_soc

    def init_point(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        x[self.nn] = 1.0
        for idx in self.soc.values():
            x[idx[:, 0]] = 1.0
        return x

    def inside(self, v: np.ndarray, margin: float = 0.0) -> bool:
        if self.nn.size and np.min(v[self.nn]) <= margin:
            return False
        for idx in self.soc.values():
            u = v[idx]
            if np.min(u[:, 0] - np.linalg.norm(u[:, 1:], axis=1)) <= margin:
                return False
        return True

    def violation(self, v: np.ndarray) -> float:
        """Max cone-membership violation (0 when v in K)."""
        worst = 0.0
        if self.nn.size:
            worst = max(worst, float(np.max(np.maximum(-v[self.nn], 0.0), initial=0.0)))
        for idx in self.soc.values():
            u = v[idx]
            worst = max(worst, float(np.max(np.maximum(
                np.linalg.norm(u[:, 1:], axis=1) - u[:, 0], 0.0), initial=0.0)))
        return worst

    def dot_barrier(self, x: np.ndarray, z: np.ndarray) -> float:
        tot = float(np.dot(x[self.nn], z[self.nn])) if self.nn.size else 0.0
        for idx in self.soc.values():
            tot += float(np.einsum("ij,ij->", x[idx], z[idx]))
        return tot

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        alpha = np.inf
        if self.nn.size:
            alpha = min(alpha, kernels.nonneg_max_step(
                np.ascontiguousarray(v[self.nn]), np.ascontiguousarray(dv[self.nn])))
        for idx in self.soc.values():
            steps = kernels.soc_max_step(
                np.ascontiguousarray(v[idx]), np.ascontiguousarray(dv[idx]))
            if steps.size:
                alpha = min(alpha, float(np.min(steps)))
        return alpha


def _jmag(u):
    """sqrt(u0^2 - ||u1||^2), computed cancellation-safely."""
    n1 = np.linalg.norm(u[:, 1:], axis=1)
    return np.sqrt(np.maximum((u[:, 0] - n1) * (u[:, 0] + n1), 0.0))


def _soc_scaling(xb: np.ndarray, zb: np.ndarray):
    """NT scaling data for a batch of SOC points, shapes (k, d).

    Returns (wbar, beta, lam) where wbar is the normalized scaling point
    (wbar' J wbar = 1), beta the magnitude ratio, and lam = W z = W^(-1) x
    the scaled point.  W itself is the symmetric square root
    beta * [[w0, w1'], [w1, I + w1 w1'/(1+w0)]].
    """
    a = _jmag(xb)
    bz = _jmag(zb)
    xt = xb / a[:, None]
    zt = zb / bz[:, None]
    gamma = np.sqrt((1.0 + np.einsum("ij,ij->i", xt, zt)) / 2.0)
    jz = zt.copy()
    jz[:, 1:] *= -1.0
    wbar = (xt + jz) / (2.0 * gamma[:, None])
    beta = np.sqrt(a / bz)
    lam = _soc_apply_w(wbar, beta, zb)
    return wbar, beta, lam


def _soc_apply_w(wbar, beta, u, inverse=False):
    """Apply the NT scaling W (or its inverse) to a batch of vectors.

    W(wbar)^(-1) equals (1/beta) * W(J wbar), so both cases share the
    structured product with v = wbar or v = J wbar.
    """
    v = wbar
    if inverse:
        v = wbar.copy()
        v[:, 1:] *= -1.0
    top = np.einsum("ij,ij->i", v, u)
    bottom = u[:, 1:] + ((u[:, 0] + top) / (1.0 + v[:, 0]))[:, None] * v[:, 1:]
    out = np.column_stack([top, bottom])
    if inverse:
        return out / beta[:, None]
    return out * beta[:, None]


def _soc_inv_hess(wbar, beta):
    """Dense blocks of S = W^(-2) = (1/beta^2) (2 v v' - J), v = J wbar."""
    k, d = wbar.shape
    v = wbar.copy()
    v[:, 1:] *= -1.0
    jdiag = -np.eye(d)
    jdiag[0, 0] = 1.0
    m = 2.0 * np.einsum("ki,kj->kij", v, v) - jdiag[None, :, :]
    return m / (beta ** 2)[:, None, None]


def _jordan_prod(u, v):
    out = np.empty_like(u)
    out[:, 0] = np.einsum("ij,ij->i", u, v)
    out[:, 1:] = u[:, 0:1] * v[:, 1:] + v[:, 0:1] * u[:, 1:]
    return out


def _jordan_div(lam, r):
    """Solve Arw(lam) w = r for w, batched."""
    det = lam[:, 0] ** 2 - np.einsum("ij,ij->i", lam[:, 1:], lam[:, 1:])
    w0 = (lam[:, 0] * r[:, 0] - np.einsum("ij,ij->i", lam[:, 1:], r[:, 1:])) / det
    w1 = (r[:, 1:] - w0[:, None] * lam[:, 1:]) / lam[:, 0:1]
    return np.column_stack([w0, w1])


class _Scaling:
    """NT scaling state for all barrier blocks at the current iterate."""

    def __init__(self, cones: _Cones, x: np.ndarray, z: np.ndarray):
        self.cones = cones
        self.nn_w2 = None  # W^2 diagonal on the nonneg block (= x/z)
        self.nn_lam = None
        if cones.nn.size:
            self.nn_w2 = x[cones.nn] / z[cones.nn]
            self.nn_lam = np.sqrt(x[cones.nn] * z[cones.nn])
        self.soc = {}
        for d, idx in cones.soc.items():
            self.soc[d] = _soc_scaling(x[idx], z[idx])

    def lam_sq_target(self):
        """lambda o lambda per block, assembled into a full-length array pair."""
        return self  # marker; targets are built via ds arrays below

    def scale_down(self, v: np.ndarray) -> np.ndarray:
        """W^(-1) v on barrier blocks (free entries zeroed)."""
        out = np.zeros_like(v)
        c = self.cones
        if c.nn.size:
            out[c.nn] = v[c.nn] / np.sqrt(self.nn_w2)
        for d, idx in c.soc.items():
            wbar, beta, _ = self.soc[d]
            out[idx] = _soc_apply_w(wbar, beta, v[idx], inverse=True)
        return out

    def scale_up(self, v: np.ndarray) -> np.ndarray:
        """W v on barrier blocks (free entries zeroed)."""
        out = np.zeros_like(v)
        c = self.cones
        if c.nn.size:
            out[c.nn] = v[c.nn] * np.sqrt(self.nn_w2)
        for d, idx in c.soc.items():
            wbar, beta, _ = self.soc[d]
            out[idx] = _soc_apply_w(wbar, beta, v[idx])
        return out

    def apply_inv_hess(self, v: np.ndarray) -> np.ndarray:
        """S v with S = W^(-2) (zero on the free block)."""
        out = np.zeros_like(v)
        c = self.cones
        if c.nn.size:
            out[c.nn] = v[c.nn] / self.nn_w2
        for d, idx in c.soc.items():
            wbar, beta, _ = self.soc[d]
            s = _soc_inv_hess(wbar, beta)
            out[idx] = np.einsum("kij,kj->ki", s, v[idx])
        return out

    def mu(self, x, z, tau, kappa) -> float:
        return (self.cones.dot_barrier(x, z) + tau * kappa) / (self.cones.degree + 1)


def _build_kkt(prog: ConeProgram, cones: _Cones, scaling: _Scaling, reg: float):
    """Assemble [[-S - reg*I, A'], [A, reg*I]] in CSC form."""
    n, m = prog.n, prog.m
    rows, cols, vals = [], [], []
    diag = np.full(n, -reg)
    if cones.nn.size:
        diag[cones.nn] -= 1.0 / scaling.nn_w2
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    for d, idx in cones.soc.items():
        wbar, beta, _ = scaling.soc[d]
        s = _soc_inv_hess(wbar, beta)  # (k, d, d)
        k = idx.shape[0]
        rr = np.repeat(idx, d, axis=1).reshape(k, d, d)
        cc = np.tile(idx[:, None, :], (1, d, 1))
        offdiag = ~np.eye(d, dtype=bool)
        rows.append(rr[:, offdiag].ravel())
        cols.append(cc[:, offdiag].ravel())
        vals.append(-s[:, offdiag].ravel())
        rows.append(idx.ravel())
        cols.append(idx.ravel())
        vals.append(-s[:, np.eye(d, dtype=bool)].ravel())
    acoo = prog.A.tocoo()
    rows.append(acoo.row + n)
    cols.append(acoo.col)
    vals.append(acoo.data)
    rows.append(acoo.col)
    cols.append(acoo.row + n)
    vals.append(acoo.data)
    rows.append(np.arange(m) + n)
    cols.append(np.arange(m) + n)
    vals.append(np.full(m, reg))
    kkt = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n + m, n + m),
    )
    return kkt.tocsc()


class _KktSolver:
    def __init__(self, prog, cones, scaling, opts: SolveOptions):
        self.prog = prog
        self.cones = cones
        self.scaling = scaling
        self.opts = opts
        reg = opts.static_reg
        last_err = None
        for _ in range(4):
            try:
                self.lu = spla.splu(_build_kkt(prog, cones, scaling, reg))
                self.reg = reg
                return
            except RuntimeError as err:  # singular factorization
                last_err = err
                reg *= 100.0
        raise SolverError(f"KKT factorization failed: {last_err}")

    def solve(self, r1: np.ndarray, r2: np.ndarray):
        n = self.prog.n
        rhs = np.concatenate([r1, r2])
        sol = self.lu.solve(rhs)
        for _ in range(self.opts.refine_steps):
            dx, dy = sol[:n], sol[n:]
            top = -self.scaling.apply_inv_hess(dx) + self.prog.A.T @ dy
            bot = self.prog.A @ dx
            resid = rhs - np.concatenate([top, bot])
            sol = sol + self.lu.solve(resid)
        return sol[:n], sol[n:]


def solve_socp(prog: ConeProgram, opts: SolveOptions | None = None) -> ConeSolution:
    """Solve a ConeProgram; see module docstring for conventions."""
    opts = opts or SolveOptions()
    prog.validate()
    cones = _Cones(prog)
    n, m = prog.n, prog.m
    if n == 0:
        status = OPTIMAL if (m == 0 or np.allclose(prog.b, 0.0)) else INFEASIBLE
        return ConeSolution(status, np.zeros(0), np.zeros(m), np.zeros(0),
                            prog.obj_offset if status == OPTIMAL else np.nan, 0)

    A, b, c = prog.A, prog.b, prog.c
    bnorm, cnorm = 1.0 + np.linalg.norm(b), 1.0 + np.linalg.norm(c)

    x = cones.init_point(n)
    z = cones.init_point(n)
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0

    best = None
    stall = 0
    status = ITERATION_LIMIT
    it = 0
    for it in range(1, opts.max_iter + 1):
        rx = A.T @ y + z - c * tau
        ry = A @ x - b * tau
        rt = float(c @ x - b @ y + kappa)

        xh, yh, zh = x / tau, y / tau, z / tau
        pres = np.linalg.norm(A @ xh - b) / bnorm
        dres = np.linalg.norm(A.T @ yh + zh - c) / cnorm
        pobj = float(c @ xh)
        dobj = float(b @ yh)
        gap = abs(pobj - dobj) / max(1.0, abs(pobj))
        mu = (cones.dot_barrier(x, z) + tau * kappa) / (cones.degree + 1)

        if opts.verbose:
            print(f"  it {it:3d}  pres {pres:9.2e} dres {dres:9.2e} gap {gap:9.2e} "
                  f"mu {mu:9.2e} tau {tau:9.2e} kappa {kappa:9.2e}")

        if pres <= opts.tol_feas and dres <= opts.tol_feas and gap <= opts.tol_gap:
            status = OPTIMAL
            best = (x.copy(), y.copy(), z.copy(), tau)
            break

        # infeasibility certificates (tau -> 0 branch of the embedding)
        hby = float(b @ y)
        if hby > 1e-12:
            if np.linalg.norm(A.T @ y + z) / hby <= opts.tol_feas * cnorm:
                status = INFEASIBLE
                best = (x.copy(), y.copy(), z.copy(), 1.0)
                break
        hcx = float(-(c @ x))
        if hcx > 1e-12:
            if np.linalg.norm(A @ x) / hcx <= opts.tol_feas * bnorm:
                status = UNBOUNDED
                best = (x.copy(), y.copy(), z.copy(), 1.0)
                break

        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(z)) or mu <= 0:
            status = NUMERICAL_FAILURE
            break

        scaling = _Scaling(cones, x, z)
        try:
            kkt = _KktSolver(prog, cones, scaling, opts)
        except SolverError:
            status = NUMERICAL_FAILURE
            break

        u2x, u2y = kkt.solve(c, b)
        denom_u2 = float(c @ u2x - b @ u2y - kappa / tau)

        def direction(rhs_scale: float, ds_nn, ds_soc, ds_tau):
            """Solve one Newton system; ds_* are complementarity targets."""
            g = np.zeros(n)
            if cones.nn.size:
                g[cones.nn] = ds_nn / scaling.nn_lam
            for d, idx in cones.soc.items():
                _, _, lam = scaling.soc[d]
                g[idx] = _jordan_div(lam, ds_soc[d])
            wg = scaling.scale_down(g)  # W^(-1) (lam \ ds)
            h1 = -rhs_scale * rx - wg
            h2 = -rhs_scale * ry
            u1x, u1y = kkt.solve(h1, h2)
            num = -rhs_scale * rt - float(c @ u1x - b @ u1y) - ds_tau / tau
            dtau = num / denom_u2
            dx = u1x + dtau * u2x
            dy = u1y + dtau * u2y
            dz = wg - scaling.apply_inv_hess(dx)
            dz[cones.free] = 0.0
            dkappa = (ds_tau - kappa * dtau) / tau
            return dx, dy, dz, dtau, dkappa

        # predictor (affine) direction
        ds_nn_aff = -(scaling.nn_lam ** 2) if cones.nn.size else np.empty(0)
        ds_soc_aff = {}
        for d, idx in cones.soc.items():
            _, _, lam = scaling.soc[d]
            ds_soc_aff[d] = -_jordan_prod(lam, lam)
        dxa, dya, dza, dta, dka = direction(1.0, ds_nn_aff, ds_soc_aff, -tau * kappa)

        alpha_aff = min(cones.max_step(x, dxa), cones.max_step(z, dza), 1.0)
        if dta < 0:
            alpha_aff = min(alpha_aff, -tau / dta)
        if dka < 0:
            alpha_aff = min(alpha_aff, -kappa / dka)
        sigma = float(np.clip((1.0 - alpha_aff) ** 3, 1e-8, 1.0 - 1e-8))

        # combined direction with Mehrotra correction
        ds_nn = ds_nn_aff.copy()
        if cones.nn.size:
            dxt = dxa[cones.nn] / np.sqrt(scaling.nn_w2)
            dzt = dza[cones.nn] * np.sqrt(scaling.nn_w2)
            ds_nn = ds_nn - dxt * dzt + sigma * mu
        ds_soc = {}
        for d, idx in cones.soc.items():
            wbar, beta, lam = scaling.soc[d]
            dxt = _soc_apply_w(wbar, beta, dxa[idx], inverse=True)
            dzt = _soc_apply_w(wbar, beta, dza[idx])
            corr = _jordan_prod(dxt, dzt)
            tgt = ds_soc_aff[d] - corr
            tgt[:, 0] += sigma * mu
            ds_soc[d] = tgt
        ds_tau = sigma * mu - tau * kappa - dta * dka
        dx, dy, dz, dtau, dkappa = direction(1.0 - sigma, ds_nn, ds_soc, ds_tau)

        alpha = min(cones.max_step(x, dx), cones.max_step(z, dz))
        if dtau < 0:
            alpha = min(alpha, -tau / dtau)
        if dkappa < 0:
            alpha = min(alpha, -kappa / dkappa)
        alpha = min(1.0, opts.step_frac * alpha)
        if alpha <= 1e-11 or not np.isfinite(alpha):
            stall += 1
            if stall >= 3:
                status = NUMERICAL_FAILURE
                break
        else:
            stall = 0

        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    if best is None:
        best = (x, y, z, max(tau, 1e-300))
    bx, by, bz, btau = best

    if status == OPTIMAL:
        xs, ys, zs = bx / btau, by / btau, bz / btau
        obj = float(c @ xs) + prog.obj_offset
    elif status in (INFEASIBLE, UNBOUNDED):
        xs, ys, zs = bx, by, bz  # certificate rays, unnormalized
        obj = np.nan
    else:
        xs, ys, zs = bx / btau, by / btau, bz / btau
        obj = float(c @ xs) + prog.obj_offset
    info = {
        "mu": (cones.dot_barrier(bx, bz) + 1.0) if status != OPTIMAL else mu,
        "tau": btau,
        "pres": pres if it else np.nan,
        "dres": dres if it else np.nan,
        "rel_gap": gap if it else np.nan,
    }
    return ConeSolution(status, xs, ys, zs, obj, it, info)


def kkt_residuals(prog: ConeProgram, sol: ConeSolution) -> dict:
    """Independent KKT diagnostics for an accepted solution."""
    cones = _Cones(prog)
    x, y, z = sol.x, sol.y, sol.z
    primal = float(np.max(np.abs(prog.A @ x - prog.b), initial=0.0))
    dual_vec = prog.A.T @ y + z - prog.c
    dual = float(np.max(np.abs(dual_vec), initial=0.0))
    pobj = float(prog.c @ x)
    dobj = float(prog.b @ y)
    gap = abs(pobj - dobj) / max(1.0, abs(pobj))
    cone_violation = max(cones.violation(x), cones.violation(z))
    if cones.free.size:
        cone_violation = max(cone_violation, float(np.max(np.abs(z[cones.free]), initial=0.0)))
    return {"primal_res": primal, "dual_res": dual, "gap": gap,
            "cone_violation": cone_violation}
