"""Convergence diagnostics: measure-based upper bounds, grid minimization over
the index set, the gap ``E(L)``, the closed-form rate bound, and the
Chebyshev / needle polynomials behind it."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import floor, log, sqrt

import numpy as np

from .moments import BALL, BOX, SIMPLICES, SPHERE, IndexSet, ball_volume, localized_matrix, range_basis
from .poly import Polynomial, partial_apply

GRID_STEP = 1.0 / 200
REFINE_STEPS = 20
HIGH_DIM_POINTS = 200_000


# ------------------------------------------------------- measure-based bound

def lasserre_upper(iset: IndexSet, psi: Polynomial, k: int) -> float:
    """Smallest generalized eigenvalue of the pencil ``(A_k(psi), B_k)``,
    i.e. ``min int psi sigma`` over SOS densities of degree 2k with unit mass.

    The pencil is reduced to a standard eigenproblem by ``range_basis``.
    """
    if k < 0:
        raise ValueError("order must be nonnegative")
    W = range_basis(iset, k)
    M = W.T @ localized_matrix(iset, psi, k) @ W
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


# ---------------------------------------------------------- grid minimizer

def _project(iset: IndexSet, pts: np.ndarray) -> np.ndarray:
    if iset.kind == BOX:
        return np.clip(pts, -1.0, 1.0)
    if iset.kind in (BALL, SPHERE):
        r = np.linalg.norm(pts, axis=-1, keepdims=True)
        if iset.kind == SPHERE:
            return pts / np.where(r == 0, 1.0, r)
        return np.where(r > 1, pts / np.where(r == 0, 1.0, r), pts)
    return pts


def _sphere_chart(n: int):
    """Angle parametrization of the unit sphere for n in (2, 3)."""
    if n == 2:
        def to_y(a):
            return np.stack([np.cos(a[..., 0]), np.sin(a[..., 0])], axis=-1)
        axes = [np.arange(0.0, 2 * np.pi, GRID_STEP)]
    else:
        def to_y(a):
            th, ph = a[..., 0], a[..., 1]
            return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        axes = [np.arange(0.0, np.pi + GRID_STEP, GRID_STEP), np.arange(0.0, 2 * np.pi, GRID_STEP)]
    return to_y, axes


def _refine(fn, iset, start, value, h, stencil, to_y=None):
    # pattern search: move while improving, halve the step otherwise
    x, best = start.copy(), value
    halvings = 0
    for _ in range(50 * REFINE_STEPS):
        if halvings >= REFINE_STEPS:
            break
        cand = x + h * stencil
        if to_y is None:
            cand = _project(iset, cand)
            if iset.kind == SIMPLICES:
                cand = cand[iset.contains(cand)]
            ys = cand
        else:
            ys = to_y(cand)
        vals = fn(ys) if len(cand) else np.array([np.inf])
        i = int(np.argmin(vals))
        if vals[i] < best:
            x, best = cand[i], float(vals[i])
        else:
            h *= 0.5
            halvings += 1
    return x, best


def _grid_min(iset: IndexSet, psi: Polynomial, high_dim: bool = False, starts: int = 5):
    n = iset.n
    fn = psi.evaluate
    if n <= 3:
        if iset.kind == SPHERE and n >= 2:
            to_y, axes = _sphere_chart(n)
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
            vals = fn(to_y(grid))
            stencil = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=len(axes))))
            best = []
            for i in np.argsort(vals)[:starts]:
                best.append(_refine(fn, iset, grid[i], float(vals[i]), GRID_STEP, stencil, to_y))
            a, v = min(best, key=lambda t: t[1])
            return to_y(a), v
        axis = np.linspace(-1.0, 1.0, int(round(2 / GRID_STEP)) + 1)
        h = GRID_STEP
        stencil = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))
        cand_pts, cand_vals = [], []
        # chunk over the first axis to keep memory bounded for n = 3
        rest = np.stack(np.meshgrid(*([axis] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1) if n > 1 else None
        for a0 in axis:
            pts = np.full((1, 1), a0) if rest is None else np.column_stack([np.full(len(rest), a0), rest])
            if iset.kind != BOX:
                pts = pts[iset.contains(pts)]
            if len(pts) == 0:
                continue
            vals = fn(pts)
            order = np.argsort(vals)[:starts]
            cand_pts.append(pts[order])
            cand_vals.append(vals[order])
        if not cand_pts:
            raise ValueError("no grid point lies in the index set")
        P, V = np.concatenate(cand_pts), np.concatenate(cand_vals)
        best = [_refine(fn, iset, P[i], float(V[i]), h, stencil) for i in np.argsort(V)[:starts]]
        return min(best, key=lambda t: t[1])
    if not high_dim:
        raise ValueError(f"grid oracle supports n <= 3, got n = {n}")
    rng = np.random.default_rng(0)
    if iset.kind == SPHERE:
        pts = _project(iset, rng.standard_normal((HIGH_DIM_POINTS, n)))
        h = 0.1
    else:
        N = max(1, int(floor(HIGH_DIM_POINTS ** (1.0 / n))) - 1)
        axis = np.linspace(-1.0, 1.0, N + 1)
        pts = np.array(list(itertools.product(axis, repeat=n)))
        pts = pts[iset.contains(pts)]
        h = 2.0 / N
        if iset.kind != BOX:
            extra = rng.uniform(-1, 1, (HIGH_DIM_POINTS, n))
            pts = np.vstack([pts, extra[iset.contains(extra)]])
    vals = fn(pts)
    stencil = np.vstack([np.zeros(n), np.eye(n), -np.eye(n)])
    best = [_refine(fn, iset, pts[i], float(vals[i]), 2 * h, stencil) for i in np.argsort(vals)[:starts]]
    if iset.kind == SPHERE:
        best = [(x / np.linalg.norm(x), fn(x / np.linalg.norm(x))) for x, _ in best]
    return min(best, key=lambda t: t[1])


def inner_min(iset: IndexSet, psi: Polynomial) -> float:
    """``min_{y in Y} psi(y)`` by a step-1/200 grid plus local bisection refinement (n <= 3)."""
    if psi.nvars != iset.n:
        raise ValueError("psi and index set dimensions differ")
    if iset.n > 3:
        raise ValueError(f"grid oracle supports n <= 3, got n = {iset.n}")
    return float(_grid_min(iset, psi)[1])


def max_over_set(iset: IndexSet, psi: Polynomial) -> float:
    """``max_{y in Y} psi(y)``; falls back to a coarse grid with coordinate
    refinement when n > 3."""
    return -float(_grid_min(iset, -psi, high_dim=True)[1])


# --------------------------------------------------------------- gap E(L)

@dataclass
class GapReport:
    E: float
    upper: float
    inner: float
    # max_y L(p(x, y)) for the normalized functional; bounded above by E
    max_Lp: float


def gap_E(prob, L, k: int, tol: float = 1e-8) -> GapReport:
    """``E(L) = p~*_k - p*_k`` for ``psi = -L(p(x, .))`` with ``L`` scaled to ``L(1) = 1``."""
    Ln = L.normalized()
    psi = -partial_apply(prob.p, "x", Ln.value)
    upper = lasserre_upper(prob.Y, psi, k)
    inner = inner_min(prob.Y, psi)
    E = upper - inner
    if E < -10 * tol:
        raise AssertionError(f"negative gap E = {E:.3e}: measure bound below the grid minimum")
    return GapReport(E, upper, inner, -inner)


# -------------------------------------------------------------- rate bound

@dataclass(frozen=True)
class RateConstants:
    B1: float
    B2: float
    eta_Y: float
    eps_Y: float
    n: int

    def __post_init__(self):
        if self.B1 < 0 or self.B2 < 0:
            raise ValueError("B1 and B2 must be nonnegative")
        if not 0 < self.eta_Y <= 1:
            raise ValueError("eta_Y must lie in (0, 1]")
        if self.eps_Y <= 0:
            raise ValueError("eps_Y must be positive")
        if self.n < 1:
            raise ValueError("n must be positive")


def rate_constant(n: int, eta_Y: float) -> float:
    """``C = 2^(3n+3) vol([-1,1]^n) / (eta_Y n^(n/2) vol(B^n))``."""
    return 2.0 ** (3 * n + 3) * 2.0 ** n / (eta_Y * n ** (n / 2) * ball_volume(n))


def rate_bound(c: RateConstants, k: int) -> float:
    """Closed-form O(log k / k) bound on ``E(L_k)``."""
    if k < 2:
        raise ValueError("the rate bound needs k >= 2")
    n = c.n
    return 2 * sqrt(n) * c.B1 * ((4 * n + 2) * log(k) / (k // 2) + rate_constant(n, c.eta_Y) / k)


def default_volume_constants(iset: IndexSet) -> tuple:
    """``(eta_Y, eps_Y)`` valid for the set, or ValueError when none is known.

    A ball of radius delta centred anywhere in the box keeps at least one
    orthant inside it for delta <= 2; for the unit ball a ball of radius
    delta/2 fits for delta <= 1. Both give eta = 2^-n.
    """
    if iset.kind == BOX:
        return 2.0 ** -iset.n, 2.0
    if iset.kind == BALL:
        return 2.0 ** -iset.n, 1.0
    if iset.kind == SPHERE:
        raise ValueError("the volume condition fails for the sphere (zero volume)")
    raise ValueError("no default volume constants for simplex unions; pass eta_Y and eps_Y")


def estimate_rate_constants(iset: IndexSet, psi: Polynomial, eta_Y=None, eps_Y=None) -> RateConstants:
    """Grid estimates of ``max ||grad psi||`` and ``max ||hess psi||_2`` on Y."""
    if eta_Y is None or eps_Y is None:
        d_eta, d_eps = default_volume_constants(iset)
        eta_Y = d_eta if eta_Y is None else eta_Y
        eps_Y = d_eps if eps_Y is None else eps_Y
    n = iset.n
    axis = np.linspace(-1, 1, 201 if n <= 2 else 21)
    pts = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    pts = pts[iset.contains(pts)]
    grad = np.stack([g.evaluate(pts) for g in psi.gradient()], axis=-1)
    H = psi.hessian()
    hess = np.stack([np.stack([H[i][j].evaluate(pts) for j in range(n)], axis=-1) for i in range(n)], axis=-2)
    B1 = float(np.max(np.linalg.norm(grad, axis=-1)))
    B2 = float(np.max(np.linalg.norm(hess, ord=2, axis=(-2, -1))))
    return RateConstants(B1, B2, float(eta_Y), float(eps_Y), n)


# ---------------------------------------------------- special polynomials

def chebyshev(k: int, t):
    """``T_k(t)``: ``cos(k arccos t)`` on [-1, 1], ``cosh`` branch outside."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) <= 1
    out = np.empty_like(t)
    out[inside] = np.cos(k * np.arccos(t[inside]))
    a = np.abs(t[~inside])
    # s^k/2 + s^-k/2 with s = |t| + sqrt(t^2 - 1); avoids |t| - sqrt(t^2 - 1)
    s = a + np.sqrt((a - 1) * (a + 1))
    out[~inside] = 0.5 * (s ** k + s ** (-k)) * np.where(t[~inside] < 0, (-1.0) ** k, 1.0)
    return float(out) if out.ndim == 0 else out


def needle(k: int, h: float, t):
    if not 0 < h < 1:
        raise ValueError("needle width h must lie in (0, 1)")
    t = np.asarray(t, dtype=float)
    out = chebyshev(k, 1 + h * h - t * t) ** 2 / chebyshev(k, 1 + h * h) ** 2
    return float(out) if np.ndim(out) == 0 else out


def phi_lower(k: int, t):
    """Piecewise-linear lower estimator ``max(1 - 2 k^2 t, 0)`` on t >= 0."""
    if k < 1:
        raise ValueError("k must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("phi_lower is defined on t >= 0")
    out = np.where(t <= 1.0 / (2 * k * k), 1 - 2 * k * k * t, 0.0)
    return float(out) if out.ndim == 0 else out
