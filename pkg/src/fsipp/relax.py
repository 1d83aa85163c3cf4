"""Moment relaxations for fractional semi-infinite polynomial programs.

The problem is

    min f(x) / g(x)  s.t.  phi_j(x) <= 0,  p(x, y) <= 0 for all y in Y,

with s.o.s-convex data. Order ``k`` of the hierarchy replaces "p(x, .) <= 0
on Y" by the requirement that ``-L(p(x, .))`` integrates nonnegatively
against every SOS density of degree 2k on Y, which is a single PSD
constraint on ``int_Y (-L(p)) v_k v_k^T dy``.
"""

from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil, comb, sqrt
from typing import Iterable, Sequence

import numpy as np

from . import diag
from .moments import IndexSet, localized_matrix, range_basis
from .poly import BiPolynomial, Polynomial, add_exp, basis_index, graded_basis
from .sdp import DEFAULT_TOL, INFEASIBILITY_MARGIN, ConicProgram, NumericalTrouble, PsdBlock, Status, phase_one, solve

log = logging.getLogger(__name__)

MAX_GRID_POINTS = 10**6


def default_radius(hint: Sequence[float] | None = None) -> float:
    """``2 (1 + max |hint_i|)``; 2 without a hint."""
    return 2.0 * (1.0 + (max(abs(float(v)) for v in hint) if hint is not None and len(hint) else 0.0))


@dataclass(frozen=True)
class FsippProblem:
    f: Polynomial
    p: BiPolynomial
    Y: IndexSet
    g: Polynomial | None = None
    phi: tuple = ()
    R: float | None = None
    gstar: float | None = None
    name: str = ""

    def __post_init__(self):
        m = self.f.nvars
        if self.g is None:
            object.__setattr__(self, "g", Polynomial.constant(1.0, m))
        object.__setattr__(self, "phi", tuple(self.phi))
        for q in (self.g, *self.phi):
            if q.nvars != m:
                raise ValueError("f, g and phi must share the x dimension")
        if self.p.xdim != m:
            raise ValueError(f"p has x dimension {self.p.xdim}, expected {m}")
        if self.p.ydim != self.Y.n:
            raise ValueError(f"p has y dimension {self.p.ydim}, index set has {self.Y.n}")
        if self.R is None:
            object.__setattr__(self, "R", default_radius())
        if self.gstar is None:
            gs = self.g.constant_term() / 2 if self.g.is_constant() else 1e-3
            object.__setattr__(self, "gstar", gs)
        if not self.R > 0:
            raise ValueError("R must be positive")
        if not self.gstar > 0:
            raise ValueError("gstar must be positive")
        if self.g.is_constant() and self.g.constant_term() <= 0:
            raise ValueError("a constant denominator must be positive")

    @property
    def m(self) -> int:
        return self.f.nvars

    @property
    def n(self) -> int:
        return self.Y.n

    @property
    def d(self) -> int:
        degs = [self.f.degree(), self.g.degree(), self.p.deg_x(), *(q.degree() for q in self.phi)]
        return max(1, ceil(max(degs) / 2))

    def with_objective(self, f: Polynomial, g: Polynomial | None = None, gstar: float | None = None) -> "FsippProblem":
        return FsippProblem(f, self.p, self.Y, g, self.phi, self.R, gstar, self.name)


@dataclass(frozen=True)
class MomentFunctional:
    """Values ``L(x^a)`` for ``|a| <= 2d`` in graded order."""

    values: np.ndarray
    m: int
    d: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if len(v) != comb(self.m + 2 * self.d, self.m):
            raise ValueError("value vector does not match the monomial basis")
        object.__setattr__(self, "values", v)

    @property
    def basis(self) -> tuple:
        return graded_basis(self.m, 2 * self.d)

    def value(self, exp) -> float:
        return float(self.values[basis_index(self.m, 2 * self.d)[tuple(exp)]])

    def __call__(self, h: Polynomial) -> float:
        return h.apply_functional(self.value)

    @property
    def mass(self) -> float:
        return float(self.values[0])

    def point(self) -> np.ndarray:
        return self.values[1 : self.m + 1] / self.mass

    def normalized(self) -> "MomentFunctional":
        return MomentFunctional(self.values / self.mass, self.m, self.d)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def norm_bound(prob: FsippProblem) -> float:
    """A priori bound on ``||L||`` for any feasible functional of the dual relaxation."""
    d = prob.d
    return sqrt(comb(prob.m + d, prob.m)) * sum(prob.R ** (2 * i) for i in range(d + 1)) / prob.gstar


@dataclass
class PrimalCertificate:
    """Multipliers of the SOS side: ``f - rho g + sum eta_j phi_j`` equals
    the pairing of ``grams`` with the constraint blocks."""

    rho: float
    eta: np.ndarray
    grams: dict


@dataclass
class HierarchyResult:
    k: int
    status: Status
    lower_bound: float
    functional: MomentFunctional | None = None
    minimizer: np.ndarray | None = None
    feas_residual: float = float("nan")
    primal_cert: PrimalCertificate | None = None
    gap_E: float | None = None
    solver_gap: float = float("nan")
    wall_time_s: float = 0.0


# ------------------------------------------------------------- assembly

def _localizing_block(q: Polynomial, order: int, m: int, d: int, name: str) -> PsdBlock:
    basis = graded_basis(m, order)
    index = basis_index(m, 2 * d)
    s = len(basis)
    mats: dict = {}
    for i in range(s):
        for j in range(i, s):
            base = add_exp(basis[i], basis[j])
            for e, c in q.items():
                M = mats.setdefault(index[add_exp(base, e)], np.zeros((s, s)))
                M[i, j] += c
                if i != j:
                    M[j, i] += c
    return PsdBlock.from_matrices(np.zeros((s, s)), mats, len(index), name)


def _outer_cone_block(prob: FsippProblem, k: int) -> PsdBlock:
    """``A_k(-L(p(x, .))) >= 0`` after the congruence of ``range_basis``."""
    index = basis_index(prob.m, 2 * prob.d)
    W = range_basis(prob.Y, k)
    mats = {}
    for alpha, coef in prob.p.x_coefficients().items():
        if sum(alpha) > 2 * prob.d:
            raise AssertionError("x-degree of p exceeds the relaxation order")
        M = -(W.T @ localized_matrix(prob.Y, coef, k) @ W)
        mats[index[alpha]] = 0.5 * (M + M.T)
    return PsdBlock.from_matrices(np.zeros((W.shape[1],) * 2), mats, len(index), "A_k")


def _common_blocks(prob: FsippProblem, with_q2: bool) -> list:
    m, d = prob.m, prob.d
    x = Polynomial.variables(m)
    q1 = prob.R ** 2 - sum((xi * xi for xi in x), Polynomial.zero(m))
    blocks = [
        _localizing_block(Polynomial.constant(1.0, m), d, m, d, "moment"),
        _localizing_block(q1, d - 1, m, d, "q1"),
    ]
    if with_q2 and not prob.g.is_constant():
        order = d - ceil(prob.g.degree() / 2)
        if order < 0:
            raise AssertionError("denominator degree exceeds the relaxation order")
        blocks.append(_localizing_block(prob.g - prob.gstar, order, m, d, "q2"))
    return blocks


def _phi_rows(prob: FsippProblem):
    N = comb(prob.m + 2 * prob.d, prob.m)
    if not prob.phi:
        return np.zeros((0, N)), np.zeros(0)
    return np.array([q.coefficient_vector(2 * prob.d) for q in prob.phi]), np.zeros(len(prob.phi))


def build_dual(prob: FsippProblem, k: int) -> ConicProgram:
    """Dual relaxation of order ``k``: minimize ``L(f)`` over moment functionals."""
    if k < 1:
        raise ValueError("relaxation order k must be >= 1")
    d = prob.d
    blocks = _common_blocks(prob, with_q2=True) + [_outer_cone_block(prob, k)]
    G, h = _phi_rows(prob)
    A = prob.g.coefficient_vector(2 * d)[None, :]
    return ConicProgram(prob.f.coefficient_vector(2 * d), blocks, A, [1.0], G, h)


def _lambda_program(prob: FsippProblem, k: int, c: np.ndarray, point=None) -> ConicProgram:
    """Constraint set defining the outer approximation of order ``k``."""
    if k < 1:
        raise ValueError("relaxation order k must be >= 1")
    m = prob.m
    N = comb(m + 2 * prob.d, m)
    blocks = _common_blocks(prob, with_q2=False) + [_outer_cone_block(prob, k)]
    G, h = _phi_rows(prob)
    rows = [np.eye(1, N, 0)[0]]
    rhs = [1.0]
    if point is not None:
        rows += [np.eye(1, N, 1 + i)[0] for i in range(m)]
        rhs += [float(u) for u in point]
    return ConicProgram(c, blocks, np.array(rows), rhs, G, h)


# --------------------------------------------------------------- solving

def feasibility_residual(prob: FsippProblem, x) -> float:
    """``max(max_y p(x, y), max_j phi_j(x), 0)`` using the grid oracle."""
    x = np.asarray(x, dtype=float)
    worst = diag.max_over_set(prob.Y, prob.p.at_x(x))
    for q in prob.phi:
        worst = max(worst, float(q.evaluate(x)))
    return max(worst, 0.0)


def solve_relaxation(prob: FsippProblem, k: int, tol: float = DEFAULT_TOL, diagnostics: bool = False) -> HierarchyResult:
    start = time.perf_counter()
    prog = build_dual(prob, k)
    try:
        sol = solve(prog, tol=tol)
    except NumericalTrouble as exc:
        log.warning("order %d: %s", k, exc)
        return HierarchyResult(k, Status.NUMERICAL_TROUBLE, float("nan"), wall_time_s=time.perf_counter() - start)
    res = HierarchyResult(k, sol.status, sol.objective_value, solver_gap=sol.gap)
    if sol.z is not None and sol.status in (Status.OPTIMAL, Status.NUMERICAL_TROUBLE):
        L = MomentFunctional(sol.z, prob.m, prob.d)
        res.functional = L
        if L.mass > 0:
            res.minimizer = L.point()
            res.feas_residual = feasibility_residual(prob, res.minimizer)
        if sol.optimal:
            grams = {blk.name: Z for blk, Z in zip(prog.blocks, sol.psd_duals)}
            res.primal_cert = PrimalCertificate(float(sol.eq_duals[0]), np.asarray(sol.ineq_duals), grams)
            if diagnostics and prob.n <= 3:
                res.gap_E = diag.gap_E(prob, L, k, tol).E
    res.wall_time_s = time.perf_counter() - start
    return res


def solve_hierarchy(prob: FsippProblem, kmax: int | None = None, tol: float = DEFAULT_TOL,
                    orders: Iterable[int] | None = None, diagnostics: bool = False, jobs: int = 1) -> list:
    """Solve the relaxations for ``k = 1..kmax`` (or the given orders), sorted by k."""
    if orders is None:
        if kmax is None or kmax < 1:
            raise ValueError("give kmax >= 1 or an explicit list of orders")
        orders = range(1, kmax + 1)
    orders = sorted(set(int(k) for k in orders))
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(lambda k: solve_relaxation(prob, k, tol, diagnostics), orders))
    return [solve_relaxation(prob, k, tol, diagnostics) for k in orders]


# ------------------------------------------------------ outer approximation

class Membership(str, enum.Enum):
    MEMBER = "member"
    NON_MEMBER = "non-member"
    INCONCLUSIVE = "inconclusive"


def membership(prob: FsippProblem, u, k: int, margin: float = INFEASIBILITY_MARGIN) -> Membership:
    """Decide whether ``u`` lies in the order-``k`` outer approximation."""
    u = np.asarray(u, dtype=float)
    if u.shape != (prob.m,):
        raise ValueError(f"point has shape {u.shape}, expected ({prob.m},)")
    if np.linalg.norm(u) > prob.R:
        return Membership.NON_MEMBER
    prog = _lambda_program(prob, k, np.zeros(comb(prob.m + 2 * prob.d, prob.m)), point=u)
    try:
        t, _ = phase_one(prog)
    except NumericalTrouble:
        return Membership.INCONCLUSIVE
    return Membership.MEMBER if t >= -margin else Membership.NON_MEMBER


def unit_directions(m: int, count: int) -> np.ndarray:
    """Evenly spread unit vectors: equal angles for m = 2, a Fibonacci lattice for m = 3."""
    if count < 0:
        raise ValueError("direction count must be nonnegative")
    i = np.arange(count)
    if m == 2:
        a = 2 * np.pi * i / max(count, 1)
        return np.column_stack([np.cos(a), np.sin(a)])
    if m == 3:
        z = 1 - (2 * i + 1) / max(count, 1)
        r = np.sqrt(1 - z * z)
        a = np.pi * (3 - np.sqrt(5)) * i
        return np.column_stack([r * np.cos(a), r * np.sin(a), z])
    raise ValueError("boundary tracing supports m = 2 or 3")


@dataclass
class SupportPoint:
    index: int
    direction: np.ndarray
    angle: float
    point: np.ndarray | None
    value: float
    status: str


def boundary_trace(prob: FsippProblem, k: int, directions, tol: float = DEFAULT_TOL) -> list:
    """Support points ``argmax c . L(x)`` of the outer approximation, ordered by angle."""
    if prob.m not in (2, 3):
        raise ValueError("boundary tracing supports m = 2 or 3")
    directions = np.asarray(directions, dtype=float).reshape(-1, prob.m)
    N = comb(prob.m + 2 * prob.d, prob.m)
    out = []
    for i, c in enumerate(directions):
        obj = np.zeros(N)
        obj[1 : prob.m + 1] = -c
        angle = float(np.arctan2(c[1], c[0]) % (2 * np.pi))
        try:
            sol = solve(_lambda_program(prob, k, obj), tol=tol)
        except NumericalTrouble as exc:
            out.append(SupportPoint(i, c, angle, None, float("nan"), f"error: {exc}"))
            continue
        if sol.z is None:
            out.append(SupportPoint(i, c, angle, None, float("nan"), sol.status.value))
            continue
        x = sol.z[1 : prob.m + 1] / sol.z[0]
        out.append(SupportPoint(i, c, angle, x, float(c @ x), sol.status.value))
    key = (lambda s: (s.angle, float(np.arccos(np.clip(s.direction[2], -1, 1))))) if prob.m == 3 else (lambda s: s.angle)
    return sorted(out, key=key)


# ---------------------------------------------------------- grid baseline

@dataclass
class DiscretizationResult:
    lower_bound: float
    point: np.ndarray | None
    npoints: int
    status: Status


class GridTooLarge(ValueError):
    pass


def grid_points(Y: IndexSet, N: int, limit: int = MAX_GRID_POINTS) -> np.ndarray:
    """``Y`` intersected with the uniform grid ``{-1 + 2i/N}^n``."""
    if N < 1:
        raise ValueError("grid parameter N must be >= 1")
    n = Y.n
    total = (N + 1) ** n
    if Y.kind == "box" and total > limit:
        raise GridTooLarge(f"grid has {total} points, limit is {limit}")
    if total > 50 * limit:
        raise GridTooLarge(f"grid has {total} candidate points; too many to enumerate")
    axis = -1.0 + 2.0 * np.arange(N + 1) / N
    kept = []
    count = 0
    chunk = 1 << 18
    for lo in range(0, total, chunk):
        idx = np.array(np.unravel_index(np.arange(lo, min(total, lo + chunk)), (N + 1,) * n)).T
        pts = axis[idx]
        pts = pts[Y.contains(pts)]
        count += len(pts)
        if count > limit:
            raise GridTooLarge(f"more than {limit} grid points lie in the index set")
        kept.append(pts)
    return np.vstack(kept) if kept else np.zeros((0, n))


def discretize_baseline(prob: FsippProblem, N: int, tol: float = DEFAULT_TOL) -> DiscretizationResult:
    """Lower bound with ``Y`` replaced by its grid points. An empty grid drops the
    semi-infinite constraint altogether."""
    ys = grid_points(prob.Y, N)
    d = prob.d
    G, h = _phi_rows(prob)
    if len(ys):
        P = np.array([prob.p.at_y(y).coefficient_vector(2 * d) for y in ys])
        G = np.vstack([G, P])
        h = np.concatenate([h, np.zeros(len(ys))])
    blocks = _common_blocks(prob, with_q2=True)
    A = prob.g.coefficient_vector(2 * d)[None, :]
    prog = ConicProgram(prob.f.coefficient_vector(2 * d), blocks, A, [1.0], G, h)
    sol = solve(prog, tol=tol)
    point = sol.z[1 : prob.m + 1] / sol.z[0] if sol.z is not None and sol.z[0] > 0 else None
    return DiscretizationResult(sol.objective_value, point, len(ys), sol.status)


# ------------------------------------------------------------- preflight

POSITIVE = "positive optimum"
NO_UPPER = "upper bound unavailable"
ZERO_OPT = "zero optimum"
ASSUMED = "positivity assumed"


@dataclass
class PreflightReport:
    lower: float
    upper: float | None
    point: np.ndarray | None
    feas_residual: float
    verdict: str
    results: list = field(default_factory=list, repr=False)


def preflight_positivity(prob: FsippProblem, tol_pair=(1e-4, 1e-4), kmax: int = 2, tol: float = DEFAULT_TOL) -> PreflightReport:
    """Check whether ``min_K f`` is bounded away from zero, using the
    relaxation with the denominator replaced by 1."""
    eps1, eps2 = tol_pair
    aux = prob.with_objective(prob.f, None, None)
    results = solve_hierarchy(aux, kmax, tol)
    last = results[-1]
    lower = max((r.lower_bound for r in results if r.status == Status.OPTIMAL), default=float("nan"))
    upper = None
    if prob.f.is_constant():
        # any point of the (nonempty) feasible set attains the constant
        upper = prob.f.constant_term()
    elif last.minimizer is not None and last.feas_residual <= eps2:
        upper = float(prob.f.evaluate(last.minimizer))
    if lower > eps2:
        verdict = POSITIVE
    elif upper is None:
        verdict = NO_UPPER
    elif upper <= eps2 and upper - lower <= eps1:
        verdict = ZERO_OPT
    else:
        verdict = ASSUMED
    return PreflightReport(lower, upper, last.minimizer, last.feas_residual, verdict, results)
