"""Conic program data model, the interior-point solve contract, and SDPA I/O.

A :class:`ConicProgram` is

    minimize    c . z
    subject to  F0_k + sum_i z_i F_ik  >= 0   (PSD, one per block k)
                A z  = b
                G z <= h

Solving goes through CVXOPT's conic interior-point method. Dual
multipliers are reported in the convention

    c = sum_k (<F_ik, Z_k>)_i + A^T y - G^T w,   Z_k >= 0, w >= 0,

so the dual objective is ``b.y - h.w - sum_k <F0_k, Z_k>``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
INFEASIBILITY_MARGIN = 1e-7


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_TROUBLE = "NumericalTrouble"


class NumericalTrouble(RuntimeError):
    """The interior-point method stalled or returned an unverifiable point."""


@dataclass(frozen=True, eq=False)
class PsdBlock:
    """Affine matrix map ``F0 + sum_i z_i F_i``.

    ``F`` has shape ``(s*s, nvars)``; column i is ``F_i`` flattened in
    column-major order. All ``F_i`` are symmetric.
    """

    F0: np.ndarray
    F: sp.csc_matrix
    name: str = ""

    @property
    def size(self) -> int:
        return self.F0.shape[0]

    @classmethod
    def from_matrices(cls, F0, mats: dict, nvars: int, name: str = "") -> "PsdBlock":
        F0 = np.asarray(F0, dtype=float)
        s = F0.shape[0]
        rows, cols, vals = [], [], []
        for i, Fi in mats.items():
            Fi = np.asarray(Fi, dtype=float)
            if Fi.shape != (s, s):
                raise ValueError(f"block {name!r}: matrix for variable {i} has shape {Fi.shape}")
            if not np.array_equal(Fi, Fi.T):
                raise ValueError(f"block {name!r}: matrix for variable {i} is not symmetric")
            flat = Fi.flatten(order="F")
            nz = np.flatnonzero(flat)
            rows.extend(nz)
            cols.extend([i] * len(nz))
            vals.extend(flat[nz])
        F = sp.csc_matrix((vals, (rows, cols)), shape=(s * s, nvars))
        return cls(F0, F, name)

    def evaluate(self, z) -> np.ndarray:
        s = self.size
        return self.F0 + (self.F @ np.asarray(z, dtype=float)).reshape((s, s), order="F")

    def coefficient(self, i: int) -> np.ndarray:
        s = self.size
        return self.F[:, i].toarray().reshape((s, s), order="F")


@dataclass(frozen=True, eq=False)
class ConicProgram:
    c: np.ndarray
    blocks: tuple = ()
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    G: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.c)
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        for key, vec in (("A", "b"), ("G", "h")):
            M, v = getattr(self, key), getattr(self, vec)
            if M is None:
                M, v = np.zeros((0, n)), np.zeros(0)
            M, v = np.atleast_2d(np.asarray(M, dtype=float)), np.asarray(v, dtype=float).reshape(-1)
            if M.size == 0:
                M = M.reshape(len(v), n)
            if M.shape != (len(v), n):
                raise ValueError(f"{key} has shape {M.shape}, expected ({len(v)}, {n})")
            object.__setattr__(self, key, M)
            object.__setattr__(self, vec, v)
        object.__setattr__(self, "blocks", tuple(self.blocks))
        for blk in self.blocks:
            if blk.F.shape != (blk.size ** 2, n):
                raise ValueError(f"block {blk.name!r} has {blk.F.shape[1]} variable columns, expected {n}")
            if not np.array_equal(blk.F0, blk.F0.T):
                raise ValueError(f"block {blk.name!r} constant term is not symmetric")

    @property
    def nvars(self) -> int:
        return len(self.c)

    def block(self, name: str) -> PsdBlock:
        for blk in self.blocks:
            if blk.name == name:
                return blk
        raise KeyError(name)

    def block_index(self, name: str) -> int:
        for i, blk in enumerate(self.blocks):
            if blk.name == name:
                return i
        raise KeyError(name)

    def residuals(self, z) -> dict:
        """Constraint violations at ``z`` (all zero for a feasible point)."""
        z = np.asarray(z, dtype=float)
        eigs = [np.linalg.eigvalsh(blk.evaluate(z))[0] for blk in self.blocks]
        return {
            "psd": max([0.0] + [-e for e in eigs]),
            "eq": float(np.max(np.abs(self.A @ z - self.b), initial=0.0)),
            "ineq": float(np.max(self.G @ z - self.h, initial=0.0)),
        }

    def equals(self, other: "ConicProgram") -> bool:
        """Exact coefficient-wise equality (block names ignored)."""
        if self.nvars != other.nvars or len(self.blocks) != len(other.blocks):
            return False
        same = (
            np.array_equal(self.c, other.c)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.G, other.G)
            and np.array_equal(self.h, other.h)
        )
        for x, y in zip(self.blocks, other.blocks):
            same = same and np.array_equal(x.F0, y.F0) and (x.F != y.F).nnz == 0
        return bool(same)


@dataclass
class ConicSolution:
    status: Status
    z: np.ndarray | None = None
    objective_value: float = float("nan")
    dual_objective: float = float("nan")
    psd_duals: list = field(default_factory=list)
    eq_duals: np.ndarray | None = None
    ineq_duals: np.ndarray | None = None
    gap: float = float("nan")
    primal_residual: float = float("nan")
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


def _cvx(M):
    import cvxopt

    if sp.issparse(M):
        M = M.tocoo()
        return cvxopt.spmatrix(M.data.tolist(), M.row.tolist(), M.col.tolist(), M.shape, "d")
    return cvxopt.matrix(np.asarray(M, dtype=float), tc="d")


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Drop linearly dependent equality rows; None if the system is inconsistent."""
    if A.shape[0] == 0:
        return A, b, np.arange(0)
    import scipy.linalg as sla

    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    scale = diag[0] if len(diag) and diag[0] > 0 else 1.0
    rank = int(np.sum(diag > tol * scale))
    keep = np.sort(piv[:rank])
    Ak, bk = A[keep], b[keep]
    if rank < A.shape[0]:
        z, *_ = np.linalg.lstsq(Ak, bk, rcond=None) if rank else (np.zeros(A.shape[1]),)
        if np.max(np.abs(A @ z - b)) > 1e-8 * max(1.0, np.max(np.abs(b))):
            return None
    return Ak, bk, keep


def solve(prog: ConicProgram, tol: float = DEFAULT_TOL, maxiters: int = 200) -> ConicSolution:
    """Solve with CVXOPT; status is Optimal only if the duality gap and the
    primal residuals are verified to be within ``tol`` (relative)."""
    import cvxopt
    from cvxopt import solvers

    n = prog.nvars
    used = np.zeros(n, dtype=bool)
    for blk in prog.blocks:
        used |= np.asarray(abs(blk.F).sum(axis=0)).ravel() > 0
    used |= np.any(prog.A != 0, axis=0) | np.any(prog.G != 0, axis=0)
    if np.any(~used & (prog.c != 0)):
        return ConicSolution(Status.UNBOUNDED)
    cols = np.flatnonzero(used)

    reduced = _independent_rows(prog.A[:, cols], prog.b)
    if reduced is None:
        return ConicSolution(Status.INFEASIBLE)
    A, b, eq_keep = reduced

    if len(cols) == 0:
        ok = all(np.linalg.eigvalsh(blk.F0)[0] >= -tol for blk in prog.blocks if blk.size) and np.all(
            prog.h >= -tol
        ) and np.all(np.abs(prog.b) <= tol)
        if not ok:
            return ConicSolution(Status.INFEASIBLE)
        return ConicSolution(
            Status.OPTIMAL, np.zeros(n), 0.0, 0.0,
            [np.zeros_like(blk.F0) for blk in prog.blocks],
            np.zeros(len(prog.b)), np.zeros(len(prog.h)), 0.0, 0.0,
        )

    c = prog.c[cols]
    kw = {}
    if prog.G.shape[0]:
        kw["Gl"] = _cvx(prog.G[:, cols])
        kw["hl"] = _cvx(prog.h.reshape(-1, 1))
    if prog.blocks:
        kw["Gs"] = [_cvx(-blk.F[:, cols]) for blk in prog.blocks]
        kw["hs"] = [_cvx(blk.F0) for blk in prog.blocks]
    if A.shape[0]:
        kw["A"] = _cvx(A)
        kw["b"] = _cvx(b.reshape(-1, 1))
    res = None
    # cvxopt can hit a zero division when pushed past attainable accuracy;
    # retry with the target tolerance itself before giving up
    for factor in (0.1, 1.0):
        options = {
            "show_progress": False,
            "abstol": factor * tol,
            "reltol": factor * tol,
            "feastol": min(1e-9, factor * tol),
            "maxiters": maxiters,
        }
        try:
            res = solvers.sdp(cvxopt.matrix(c), kktsolver="ldl", options=options, **kw)
            break
        except (ValueError, ArithmeticError) as exc:
            log.debug("cvxopt failed: %s", exc)
    if res is None:
        return ConicSolution(Status.NUMERICAL_TROUBLE)

    status = res["status"]
    if status == "primal infeasible":
        return ConicSolution(Status.INFEASIBLE)
    if status == "dual infeasible":
        return ConicSolution(Status.UNBOUNDED)
    if res["x"] is None:
        return ConicSolution(Status.NUMERICAL_TROUBLE)

    z = np.zeros(n)
    z[cols] = np.array(res["x"]).ravel()
    zs = [np.array(Z) for Z in res["zs"]] if prog.blocks else []
    zs = [0.5 * (Z + Z.T) for Z in zs]
    zl = np.array(res["zl"]).ravel() if prog.G.shape[0] else np.zeros(0)
    y = np.zeros(len(prog.b))
    if A.shape[0]:
        y[eq_keep] = -np.array(res["y"]).ravel()

    pobj = float(c @ np.array(res["x"]).ravel())
    dobj = float(b @ y[eq_keep]) - float(prog.h @ zl) - sum(float(np.sum(blk.F0 * Z)) for blk, Z in zip(prog.blocks, zs))
    gap = abs(pobj - dobj) / (1.0 + abs(pobj))
    resid = prog.residuals(z)
    scale = 1.0 + max(
        [np.max(np.abs(prog.b), initial=0.0), np.max(np.abs(prog.h), initial=0.0)]
        + [np.max(np.abs(blk.F0), initial=0.0) for blk in prog.blocks]
    )
    presid = max(resid.values()) / scale
    sol = ConicSolution(
        Status.OPTIMAL, z, pobj, dobj, zs, y, zl, gap, presid, int(res.get("iterations", 0) or 0)
    )
    if gap > tol or presid > max(tol, 1e-9) * 10:
        log.debug("unverified solve: cvxopt status=%s gap=%.3g resid=%.3g", status, gap, presid)
        sol.status = Status.NUMERICAL_TROUBLE
    return sol


def phase_one(prog: ConicProgram, tol: float = DEFAULT_TOL) -> tuple:
    """Largest uniform margin ``t`` (capped at 1) by which every PSD block
    and inequality can be satisfied, subject to the equalities.

    Returns ``(t, solution)``; ``t`` is ``-inf`` when the equalities alone
    are inconsistent.
    """
    n = prog.nvars
    if not prog.blocks and prog.G.shape[0] == 0:
        if prog.A.shape[0] == 0 or _independent_rows(prog.A, prog.b) is not None:
            return 1.0, None
        return -np.inf, None
    blocks = []
    for blk in prog.blocks:
        s = blk.size
        extra = sp.csc_matrix(-np.eye(s).flatten(order="F").reshape(-1, 1))
        blocks.append(PsdBlock(blk.F0, sp.hstack([blk.F, extra], format="csc"), blk.name))
    G = np.vstack([np.hstack([prog.G, np.ones((prog.G.shape[0], 1))]), np.eye(1, n + 1, n)])
    h = np.concatenate([prog.h, [1.0]])
    A = np.hstack([prog.A, np.zeros((prog.A.shape[0], 1))])
    c = np.zeros(n + 1)
    c[n] = -1.0
    aux = ConicProgram(c, blocks, A, prog.b, G, h)
    sol = solve(aux, tol=tol)
    if sol.status == Status.INFEASIBLE:
        return -np.inf, sol
    if sol.status != Status.OPTIMAL:
        raise NumericalTrouble(f"phase-one solve ended with status {sol.status.value}")
    return float(sol.z[n]), sol


def feasible(prog: ConicProgram, tol: float = INFEASIBILITY_MARGIN) -> bool:
    """True iff the constraints hold with margin no worse than ``-tol``."""
    t, _ = phase_one(prog)
    return t >= -tol


# ---------------------------------------------------------------- SDPA I/O

_EQ_TAG = "*fsipp equalities"
_NAME_TAG = "*fsipp blocks"


def export_sdpa(prog: ConicProgram, path) -> Path:
    """Write ``prog`` in SDPA sparse format (``.dat-s``).

    SDPA reads ``min c.x  s.t.  sum_i F_i x_i - F_0 >= 0``; our constant
    term is therefore written negated. Linear rows go to one trailing
    diagonal (LP) block; each equality becomes a consecutive pair of
    opposite inequalities, recorded in a comment line so that
    :func:`import_sdpa` restores it.
    """
    path = Path(path)
    n = prog.nvars
    lin_F0, lin_F = [], []
    for a, bi in zip(prog.A, prog.b):
        lin_F0 += [bi, -bi]
        lin_F += [a, -a]
    for g, hi in zip(prog.G, prog.h):
        lin_F0.append(-hi)
        lin_F.append(-g)
    struct = [blk.size for blk in prog.blocks]
    if lin_F0:
        struct.append(-len(lin_F0))

    def fmt(v):
        return f"{float(v):.17g}"

    lines = []
    if prog.A.shape[0]:
        lines.append(f"{_EQ_TAG} {prog.A.shape[0]}")
    if any(blk.name for blk in prog.blocks):
        lines.append(f"{_NAME_TAG} " + " ".join(blk.name or "-" for blk in prog.blocks))
    lines.append(str(n))
    lines.append(str(len(struct)))
    lines.append(" ".join(str(s) for s in struct))
    lines.append(" ".join(fmt(v) for v in prog.c))
    entries = []
    for bno, blk in enumerate(prog.blocks, start=1):
        s = blk.size
        for i in range(s):
            for j in range(i, s):
                if blk.F0[i, j] != 0:
                    entries.append((0, bno, i + 1, j + 1, -blk.F0[i, j]))
        F = blk.F.tocsc()
        for var in range(n):
            col = F[:, var]
            for flat, v in zip(col.indices, col.data):
                i, j = flat % s, flat // s
                if i <= j and v != 0:
                    entries.append((var + 1, bno, i + 1, j + 1, v))
    if lin_F0:
        bno = len(prog.blocks) + 1
        for r, v in enumerate(lin_F0):
            if v != 0:
                entries.append((0, bno, r + 1, r + 1, v))
        for r, row in enumerate(lin_F):
            for var in np.flatnonzero(row):
                entries.append((var + 1, bno, r + 1, r + 1, row[var]))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    lines.extend(f"{m} {bno} {i} {j} {fmt(v)}" for m, bno, i, j, v in entries)
    path.write_text("\n".join(lines) + "\n")
    return path


def import_sdpa(path) -> ConicProgram:
    """Read an SDPA sparse file written by :func:`export_sdpa` (or any
    standard ``.dat-s`` file)."""
    text = Path(path).read_text().splitlines()
    neq = 0
    names = None
    body = []
    for line in text:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith(_EQ_TAG):
            neq = int(stripped[len(_EQ_TAG):])
            continue
        if stripped.startswith(_NAME_TAG):
            names = stripped[len(_NAME_TAG):].split()
            continue
        if stripped[0] in "*\"":
            continue
        body.append(stripped)
    n = int(body[0].split()[0])
    nblocks = int(body[1].split()[0])
    struct = [int(float(s)) for s in body[2].replace(",", " ").replace("{", " ").replace("}", " ").split()[:nblocks]]
    c = np.array([float(v) for v in body[3].replace(",", " ").replace("{", " ").replace("}", " ").split()[:n]])
    psd = {b: (np.zeros((s, s)), {}) for b, s in enumerate(struct, start=1) if s > 0}
    lp = {b: (np.zeros(-s), np.zeros((-s, n))) for b, s in enumerate(struct, start=1) if s < 0}
    for line in body[4:]:
        m, bno, i, j, v = line.split()[:5]
        m, bno, i, j, v = int(m), int(bno), int(i) - 1, int(j) - 1, float(v)
        if bno in lp:
            F0, F = lp[bno]
            if m == 0:
                F0[i] = v
            else:
                F[i, m - 1] = v
            continue
        F0, mats = psd[bno]
        target = F0 if m == 0 else mats.setdefault(m - 1, np.zeros_like(F0))
        target[i, j] = target[j, i] = v
    blocks = []
    for k, (bno, (F0, mats)) in enumerate(sorted(psd.items())):
        name = names[k] if names and k < len(names) and names[k] != "-" else ""
        blocks.append(PsdBlock.from_matrices(-F0, mats, n, name))
    A, b, G, h = [], [], [], []
    for bno in sorted(lp):
        F0, F = lp[bno]
        rows = list(range(len(F0)))
        while neq and rows:
            r = rows[0]
            A.append(F[r])
            b.append(F0[r])
            rows = rows[2:]
            neq -= 1
        for r in rows:
            G.append(-F[r])
            h.append(-F0[r])
    return ConicProgram(
        c,
        blocks,
        np.array(A).reshape(len(A), n),
        np.array(b),
        np.array(G).reshape(len(G), n),
        np.array(h),
    )

