"""Branch-and-bound over conic relaxations for mixed-integer SOCPs.

Deterministic by construction: best-bound node selection with insertion
order as tie-break, most-fractional branching with lowest variable index
as tie-break, serial node processing.  The only heuristic is rounding
the relaxation (integers fixed to the rounded values, continuous part
re-solved).
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .conic import (INFEASIBLE, ITERATION_LIMIT, NUMERICAL_FAILURE, OPTIMAL,
                    UNBOUNDED, ConeProgram, SolveOptions, SolverError,
                    extend_with_bounds, solve_socp)


class MipError(RuntimeError):
    pass


@dataclass
class IntegerSpec:
    """Indices of integer variables in a ConeProgram plus finite bounds."""

    indices: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if len(set(self.indices.tolist())) != self.indices.size:
            raise MipError("integer indices must be distinct")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise MipError("integer variables need finite bounds")
        if np.any(self.lower > self.upper):
            raise MipError("empty integer bound ranges")

    @property
    def size(self) -> int:
        return self.indices.size


@dataclass
class MipOptions:
    rel_gap: float = 1e-6
    node_limit: int = 100_000
    int_tol: float = 1e-6
    socp: SolveOptions = field(default_factory=SolveOptions)
    verbose: bool = False


@dataclass
class MipSolution:
    status: str  # optimal | limit | infeasible | unbounded
    assignment: np.ndarray | None  # integer values over ispec.indices
    x: np.ndarray | None  # full continuous completion
    objective: float
    best_bound: float
    node_count: int


def _solve_node(prog, ispec, lo, hi, opts: MipOptions):
    node_prog = extend_with_bounds(
        prog, {int(j): (float(l), float(h))
               for j, l, h in zip(ispec.indices, lo, hi)})
    sol = solve_socp(node_prog, opts.socp)
    if sol.status == NUMERICAL_FAILURE:
        retry = SolveOptions(**{**opts.socp.__dict__})
        retry.tol_feas = max(retry.tol_feas, 1e-6)
        retry.tol_gap = max(retry.tol_gap, 1e-6)
        retry.static_reg = retry.static_reg * 100
        sol = solve_socp(node_prog, retry)
    return sol


def solve_misocp(prog: ConeProgram, ispec: IntegerSpec,
                 opts: MipOptions | None = None) -> MipSolution:
    """Globally solve min c'x s.t. conic constraints, x[ispec] integer."""
    opts = opts or MipOptions()
    if ispec.size == 0:
        sol = solve_socp(prog, opts.socp)
        status = "optimal" if sol.status == OPTIMAL else sol.status
        return MipSolution(status, np.empty(0), sol.x, sol.objective,
                           sol.objective, 1)

    root_lo = np.ceil(ispec.lower - opts.int_tol)
    root_hi = np.floor(ispec.upper + opts.int_tol)
    if np.any(root_lo > root_hi):
        return MipSolution("infeasible", None, None, np.inf, np.inf, 0)

    incumbent_obj = np.inf
    incumbent_x = None
    seq = 0
    heap: list = []
    nodes_done = 0

    def push(bound, lo, hi):
        nonlocal seq
        heapq.heappush(heap, (bound, seq, lo, hi))
        seq += 1

    def maybe_incumbent(obj, x):
        nonlocal incumbent_obj, incumbent_x
        if obj < incumbent_obj - 1e-12:
            incumbent_obj = obj
            incumbent_x = x.copy()

    def try_rounding(xrel, lo, hi):
        """Fix integers to the rounded relaxation and complete."""
        vals = np.clip(np.round(xrel[ispec.indices]), lo, hi)
        fixed = _solve_node(prog, ispec, vals, vals, opts)
        if fixed.status == OPTIMAL:
            maybe_incumbent(fixed.objective, fixed.x)

    push(-np.inf, root_lo, root_hi)
    status = "optimal"
    while heap:
        bound0, _, lo, hi = heapq.heappop(heap)
        best_bound = bound0 if np.isfinite(bound0) else -np.inf
        if (np.isfinite(incumbent_obj)
                and incumbent_obj - best_bound
                <= opts.rel_gap * max(1.0, abs(incumbent_obj))):
            break  # gap closed; bound0 is the global best bound
        if nodes_done >= opts.node_limit:
            status = "limit"
            break
        sol = _solve_node(prog, ispec, lo, hi, opts)
        nodes_done += 1
        if sol.status == INFEASIBLE:
            continue
        if sol.status == UNBOUNDED:
            return MipSolution("unbounded", None, None, -np.inf, -np.inf, nodes_done)
        if sol.status in (NUMERICAL_FAILURE, ITERATION_LIMIT):
            raise MipError(f"node relaxation failed with status {sol.status}")
        if sol.objective >= incumbent_obj - opts.rel_gap * max(1.0, abs(incumbent_obj)):
            continue
        xi = sol.x[ispec.indices]
        frac = np.abs(xi - np.round(xi))
        if opts.verbose:
            print(f"  node {nodes_done}: bound {sol.objective:.8g} "
                  f"incumbent {incumbent_obj:.8g} maxfrac {frac.max():.2e}")
        if np.all(frac <= opts.int_tol):
            maybe_incumbent(sol.objective, sol.x)
            continue
        if incumbent_x is None and nodes_done % 5 == 1:
            try_rounding(sol.x, lo, hi)
        j = int(np.argmax(frac))  # ties -> lowest index via argmax semantics
        val = xi[j]
        fl = np.floor(val)
        left_hi = hi.copy()
        left_hi[j] = min(hi[j], fl)
        right_lo = lo.copy()
        right_lo[j] = max(lo[j], fl + 1.0)
        if lo[j] <= left_hi[j]:
            push(sol.objective, lo, left_hi)
        if right_lo[j] <= hi[j]:
            push(sol.objective, right_lo, hi)
    else:
        best_bound = incumbent_obj  # tree exhausted

    if heap and status == "optimal":
        # loop broke via gap test; bound comes from the popped node
        pass
    if incumbent_x is None:
        if status == "limit":
            return MipSolution("limit", None, None, np.inf, best_bound, nodes_done)
        return MipSolution("infeasible", None, None, np.inf, np.inf, nodes_done)

    assignment = np.round(incumbent_x[ispec.indices])
    return MipSolution(status, assignment, incumbent_x, incumbent_obj,
                       min(best_bound, incumbent_obj), nodes_done)
