"""Standard-form cone program container and incremental builder.

Problems are stored as

    minimize    c'x + offset
    subject to  A x = b
                x in K = (free block) x (nonneg block) x (SOC blocks)

Every variable belongs to exactly one cone block and every equality row
carries an opaque tag so callers can locate semantic constraints (for
example a nodal power balance row) after the solve.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

FREE = "free"
NONNEG = "nonneg"
SOC = "soc"


class ProgramError(ValueError):
    """Raised for dimension or cone-structure inconsistencies."""


@dataclass(frozen=True)
class ConeBlock:
    kind: str
    start: int
    dim: int
    name: str = ""

    @property
    def stop(self) -> int:
        return self.start + self.dim


@dataclass
class ConeProgram:
    """Immutable-by-convention standard-form conic problem."""

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    blocks: list[ConeBlock]
    row_tags: list = field(default_factory=list)
    obj_offset: float = 0.0

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]

    def validate(self) -> None:
        if self.A.shape != (self.m, self.n):
            raise ProgramError(f"A is {self.A.shape}, expected ({self.m}, {self.n})")
        if len(self.row_tags) != self.m:
            raise ProgramError("row_tags must cover every equality row")
        pos = 0
        for blk in self.blocks:
            if blk.start != pos or blk.dim < 1:
                raise ProgramError(f"cone blocks must tile the variable vector; bad block {blk}")
            if blk.kind not in (FREE, NONNEG, SOC):
                raise ProgramError(f"unknown cone kind {blk.kind!r}")
            pos = blk.stop
        if pos != self.n:
            raise ProgramError(f"cone blocks cover {pos} of {self.n} variables")

    def rows_tagged(self, head) -> list[int]:
        """Row indices whose tag starts with ``head`` (tuple prefix match)."""
        out = []
        for i, tag in enumerate(self.row_tags):
            if isinstance(tag, tuple) and tag[: len(head)] == tuple(head):
                out.append(i)
        return out

    def dump(self, path) -> None:
        """Write a plain-text description (dimensions, sparse triplets)."""
        coo = self.A.tocoo()
        with open(path, "w") as fh:
            fh.write(f"coneprogram n={self.n} m={self.m} nnz={coo.nnz} offset={self.obj_offset!r}\n")
            for blk in self.blocks:
                fh.write(f"block {blk.kind} start={blk.start} dim={blk.dim} name={blk.name}\n")
            fh.write("c\n")
            for j, v in enumerate(self.c):
                if v != 0.0:
                    fh.write(f"{j} {v!r}\n")
            fh.write("A\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {v!r}\n")
            fh.write("b\n")
            for i, v in enumerate(self.b):
                fh.write(f"{i} {v!r} {self.row_tags[i]!r}\n")


class ProgramBuilder:
    """Accumulates variables, equality rows and objective terms."""

    def __init__(self):
        self._blocks: list[ConeBlock] = []
        self._n = 0
        self._rows_idx: list[np.ndarray] = []
        self._rows_val: list[np.ndarray] = []
        self._rhs: list[float] = []
        self._tags: list = []
        self._obj: dict[int, float] = {}
        self._offset = 0.0

    # -- variables ---------------------------------------------------------
    def _add_block(self, kind: str, dim: int, name: str) -> np.ndarray:
        if dim < 1:
            raise ProgramError(f"block {name!r} must have dim >= 1")
        blk = ConeBlock(kind, self._n, dim, name)
        self._blocks.append(blk)
        self._n += dim
        return np.arange(blk.start, blk.stop)

    def add_free(self, name: str, dim: int = 1) -> np.ndarray:
        return self._add_block(FREE, dim, name)

    def add_nonneg(self, name: str, dim: int = 1) -> np.ndarray:
        return self._add_block(NONNEG, dim, name)

    def add_soc(self, name: str, dim: int) -> np.ndarray:
        if dim < 2:
            raise ProgramError("SOC blocks need dim >= 2")
        return self._add_block(SOC, dim, name)

    # -- rows / objective ----------------------------------------------------
    def add_eq(self, idx, val, rhs: float, tag) -> int:
        """Add the equality sum(val[k] * x[idx[k]]) = rhs; returns row index."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        val = np.atleast_1d(np.asarray(val, dtype=np.float64))
        if idx.shape != val.shape:
            raise ProgramError("index/value length mismatch in add_eq")
        self._rows_idx.append(idx)
        self._rows_val.append(val)
        self._rhs.append(float(rhs))
        self._tags.append(tag)
        return len(self._rhs) - 1

    def add_le(self, idx, val, rhs: float, tag) -> int:
        """sum(val*x) <= rhs via a fresh slack: sum(val*x) + s = rhs."""
        s = self.add_nonneg(f"slack:{tag}")
        idx = np.append(np.atleast_1d(np.asarray(idx, dtype=np.int64)), s)
        val = np.append(np.atleast_1d(np.asarray(val, dtype=np.float64)), 1.0)
        return self.add_eq(idx, val, rhs, tag)

    def add_ge(self, idx, val, rhs: float, tag) -> int:
        s = self.add_nonneg(f"slack:{tag}")
        idx = np.append(np.atleast_1d(np.asarray(idx, dtype=np.int64)), s)
        val = np.append(np.atleast_1d(np.asarray(val, dtype=np.float64)), -1.0)
        return self.add_eq(idx, val, rhs, tag)

    def add_box(self, j: int, lo: float, hi: float, tag) -> None:
        self.add_ge([j], [1.0], lo, (*tag, "lo"))
        self.add_le([j], [1.0], hi, (*tag, "hi"))

    def add_obj(self, idx, val) -> None:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        val = np.atleast_1d(np.asarray(val, dtype=np.float64))
        for j, v in zip(idx, val):
            self._obj[int(j)] = self._obj.get(int(j), 0.0) + float(v)

    def add_offset(self, v: float) -> None:
        self._offset += float(v)

    def add_quad_epigraph(self, idx, shift, weight: float, name: str) -> int:
        """Add t >= sum((x[idx] - shift)^2) as a rotated cone and weight*t to
        the objective; returns the index of the epigraph variable t.

        The rotated cone 2*t*(1/2) >= ||u||^2 is encoded as the plain SOC
        (t + 1/2, t - 1/2, u) with equality rows binding the SOC members.
        """
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        shift = np.broadcast_to(np.asarray(shift, dtype=np.float64), idx.shape)
        t = self.add_free(f"{name}:epi")[0]
        w = self.add_soc(f"{name}:cone", 2 + idx.size)
        self.add_eq([w[0], t], [1.0, -1.0], 0.5, (name, "w0"))
        self.add_eq([w[1], t], [1.0, -1.0], -0.5, (name, "w1"))
        for k, (j, sh) in enumerate(zip(idx, shift)):
            self.add_eq([w[2 + k], j], [1.0, -1.0], -sh, (name, "u", k))
        if weight:
            self.add_obj([t], [weight])
        return int(t)

    # -- assembly ------------------------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    def build(self) -> ConeProgram:
        m = len(self._rhs)
        if m:
            counts = np.fromiter((a.size for a in self._rows_idx), dtype=np.int64, count=m)
            rows = np.repeat(np.arange(m, dtype=np.int64), counts)
            cols = np.concatenate(self._rows_idx) if counts.sum() else np.empty(0, dtype=np.int64)
            vals = np.concatenate(self._rows_val) if counts.sum() else np.empty(0)
        else:
            rows = cols = np.empty(0, dtype=np.int64)
            vals = np.empty(0)
        if cols.size and (cols.min() < 0 or cols.max() >= self._n):
            raise ProgramError("equality row references unknown variable")
        A = sp.coo_matrix((vals, (rows, cols)), shape=(m, self._n)).tocsr()
        A.sum_duplicates()
        c = np.zeros(self._n)
        for j, v in self._obj.items():
            c[j] = v
        prog = ConeProgram(
            c=c,
            A=A,
            b=np.asarray(self._rhs, dtype=np.float64),
            blocks=list(self._blocks),
            row_tags=list(self._tags),
            obj_offset=self._offset,
        )
        prog.validate()
        return prog


def extend_with_bounds(prog: ConeProgram, bounds: dict[int, tuple]) -> ConeProgram:
    """Return a copy of ``prog`` with extra rows enforcing lo <= x_j <= hi.

    Used by the branch-and-bound layer; bounds already implied by cone
    membership (lower bound <= 0 on a nonneg variable) are skipped, and
    lo == hi collapses to a single pinning row without a slack.
    """
    kind_of = np.empty(prog.n, dtype=object)
    for blk in prog.blocks:
        kind_of[blk.start : blk.stop] = blk.kind

    extra_rows = []  # (j, sign_of_slack or 0, rhs, tag)
    for j, (lo, hi) in sorted(bounds.items()):
        if lo is not None and hi is not None and lo > hi:
            raise ProgramError(f"empty bound domain for variable {j}")
        if lo is not None and hi is not None and lo == hi:
            extra_rows.append((j, 0, float(lo), ("branch", j, "fix")))
            continue
        if lo is not None and not (kind_of[j] == NONNEG and lo <= 0):
            extra_rows.append((j, -1, float(lo), ("branch", j, "lo")))
        if hi is not None:
            extra_rows.append((j, +1, float(hi), ("branch", j, "hi")))
    if not extra_rows:
        return prog

    n_slack = sum(1 for r in extra_rows if r[1] != 0)
    n_new = prog.n + n_slack
    rows, cols, vals, rhs, tags = [], [], [], [], []
    s = prog.n
    for i, (j, sgn, val, tag) in enumerate(extra_rows):
        rows.append(i)
        cols.append(j)
        vals.append(1.0)
        if sgn:
            rows.append(i)
            cols.append(s)
            vals.append(float(sgn))
            s += 1
        rhs.append(val)
        tags.append(tag)
    B = sp.coo_matrix((vals, (rows, cols)), shape=(len(extra_rows), n_new)).tocsr()
    A = sp.hstack([prog.A, sp.csr_matrix((prog.m, n_slack))], format="csr")
    blocks = list(prog.blocks)
    if n_slack:
        blocks.append(ConeBlock(NONNEG, prog.n, n_slack, "branch-slacks"))
    out = ConeProgram(
        c=np.concatenate([prog.c, np.zeros(n_slack)]),
        A=sp.vstack([A, B], format="csr"),
        b=np.concatenate([prog.b, np.asarray(rhs)]),
        blocks=blocks,
        row_tags=list(prog.row_tags) + tags,
        obj_offset=prog.obj_offset,
    )
    out.validate()
    return out
