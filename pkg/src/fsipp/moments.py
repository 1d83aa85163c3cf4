"""Exact monomial moments over simple index sets and the matrices built from them.

Supported sets all live in ``[-1, 1]^n``: the box itself, the unit sphere
(surface measure), the unit ball, and finite unions of simplices with
disjoint interiors. Integrals over a simplex are computed exactly by
pulling the monomial back to the standard simplex, where
``int t^a dt = a! / (|a| + n)!``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from math import factorial, lgamma, exp, pi, gamma
from typing import Sequence

import numpy as np

from .poly import Polynomial, add_exp, graded_basis

BOX, SPHERE, BALL, SIMPLICES = "box", "sphere", "ball", "simplices"
KINDS = (BOX, SPHERE, BALL, SIMPLICES)


@dataclass(frozen=True)
class IndexSet:
    kind: str
    n: int
    simplices: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown index set kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.kind == SIMPLICES:
            if not self.simplices:
                raise ValueError("a simplex union needs at least one simplex")
            for s in self.simplices:
                v = np.asarray(s, dtype=float)
                if v.shape != (self.n + 1, self.n):
                    raise ValueError(f"simplex must have {self.n + 1} vertices in R^{self.n}, got shape {v.shape}")
                if np.any(np.abs(v) > 1 + 1e-12):
                    raise ValueError("simplex vertices must lie in [-1, 1]^n")
                if abs(np.linalg.det(v[1:] - v[0])) < 1e-14:
                    raise ValueError("simplex vertices are affinely dependent")

    @classmethod
    def box(cls, n: int) -> "IndexSet":
        return cls(BOX, n)

    @classmethod
    def sphere(cls, n: int) -> "IndexSet":
        return cls(SPHERE, n)

    @classmethod
    def ball(cls, n: int) -> "IndexSet":
        return cls(BALL, n)

    @classmethod
    def from_simplices(cls, simplices: Sequence) -> "IndexSet":
        simplices = tuple(tuple(tuple(float(c) for c in vert) for vert in s) for s in simplices)
        n = len(simplices[0][0]) if simplices else 0
        return cls(SIMPLICES, n, simplices)

    @classmethod
    def from_polytope(cls, vertices: Sequence) -> "IndexSet":
        """Triangulate a convex polytope given by its vertices.

        The triangulation fans from the first vertex over the hull facets
        that do not contain it. The vertex list may contain interior points;
        they are ignored.
        """
        v = np.asarray(vertices, dtype=float)
        n = v.shape[1]
        if n == 1:
            lo, hi = v.min(), v.max()
            return cls.from_simplices([[[lo], [hi]]])
        from scipy.spatial import ConvexHull

        hull = ConvexHull(v)
        apex = hull.vertices[0] if 0 not in hull.vertices else 0
        simplices = []
        for facet, eq in zip(hull.simplices, hull.equations):
            # skip facets whose hyperplane passes through the apex
            if abs(eq[:-1] @ v[apex] + eq[-1]) <= 1e-12:
                continue
            simplices.append([v[apex]] + [v[i] for i in facet])
        return cls.from_simplices(simplices)

    # geometry
    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        """Membership mask for points of shape ``(..., n)``."""
        y = np.asarray(points, dtype=float)
        if y.shape[-1] != self.n:
            raise ValueError(f"points have dimension {y.shape[-1]}, expected {self.n}")
        if self.kind == BOX:
            return np.all(np.abs(y) <= 1 + tol, axis=-1)
        r = np.linalg.norm(y, axis=-1)
        if self.kind == BALL:
            return r <= 1 + tol
        if self.kind == SPHERE:
            return np.abs(r - 1) <= tol
        mask = np.zeros(y.shape[:-1], dtype=bool)
        for s in self.simplices:
            s = np.asarray(s)
            T = (s[1:] - s[0]).T
            lam = np.linalg.solve(T, (y - s[0]).reshape(-1, self.n).T).T.reshape(y.shape)
            inside = np.all(lam >= -tol, axis=-1) & (lam.sum(axis=-1) <= 1 + tol)
            mask |= inside
        return mask

    def measure(self) -> float:
        return moment(self, (0,) * self.n)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n": self.n}
        if self.kind == SIMPLICES:
            out["vertices"] = [[list(v) for v in s] for s in self.simplices]
        return out


def _sphere_moment(beta: Sequence[int]) -> float:
    if any(b % 2 for b in beta):
        return 0.0
    hats = [0.5 * (b + 1) for b in beta]
    return 2.0 * exp(sum(lgamma(h) for h in hats) - lgamma(sum(hats)))


def _simplex_moment(vertices, beta: Sequence[int]) -> float:
    v = np.asarray(vertices, dtype=float)
    n = v.shape[1]
    B = (v[1:] - v[0]).T
    pulled = Polynomial.monomial(beta).substitute_affine(B, v[0])
    total = 0.0
    for a, c in pulled.items():
        num = 1
        for ai in a:
            num *= factorial(ai)
        total += c * num / factorial(sum(a) + n)
    return abs(np.linalg.det(B)) * total


def moment(iset: IndexSet, beta: Sequence[int]) -> float:
    """``int_Y y^beta dy`` (surface measure for the sphere)."""
    beta = tuple(int(b) for b in beta)
    if len(beta) != iset.n:
        raise ValueError(f"exponent {beta} does not match dimension {iset.n}")
    if iset.kind == BOX:
        if any(b % 2 for b in beta):
            return 0.0
        return float(np.prod([2.0 / (b + 1) for b in beta]))
    if iset.kind == SPHERE:
        return _sphere_moment(beta)
    if iset.kind == BALL:
        return _sphere_moment(beta) / (sum(beta) + iset.n)
    return float(sum(_simplex_moment(s, beta) for s in iset.simplices))


class MomentTable:
    """All moments of ``iset`` up to ``maxdeg``, grown on demand."""

    def __init__(self, iset: IndexSet, maxdeg: int = 0):
        self.set = iset
        self.maxdeg = -1
        self.values: dict = {}
        self._lock = threading.Lock()
        self.grow(maxdeg)

    def grow(self, maxdeg: int):
        if maxdeg <= self.maxdeg:
            return
        with self._lock:
            if maxdeg <= self.maxdeg:
                return
            new = {b: moment(self.set, b) for b in graded_basis(self.set.n, maxdeg) if sum(b) > self.maxdeg}
            self.values = {**self.values, **new}
            self.maxdeg = maxdeg

    def __getitem__(self, beta) -> float:
        beta = tuple(beta)
        if sum(beta) > self.maxdeg:
            self.grow(sum(beta))
        return self.values[beta]


_TABLES: dict = {}
_TABLES_LOCK = threading.Lock()


def moment_table(iset: IndexSet, maxdeg: int) -> MomentTable:
    with _TABLES_LOCK:
        table = _TABLES.get(iset)
        if table is None:
            table = _TABLES[iset] = MomentTable(iset, 0)
    table.grow(maxdeg)
    return table


def shifted_moment_matrix(iset: IndexSet, shift: Sequence[int], k: int) -> np.ndarray:
    """``int_Y y^shift v_k v_k^T dy``."""
    basis = graded_basis(iset.n, k)
    table = moment_table(iset, 2 * k + sum(shift))
    shift = tuple(shift)
    N = len(basis)
    M = np.empty((N, N))
    for i in range(N):
        for j in range(i, N):
            M[i, j] = M[j, i] = table[add_exp(add_exp(basis[i], basis[j]), shift)]
    return M


def moment_matrix(iset: IndexSet, k: int) -> np.ndarray:
    """``B_k = int_Y v_k v_k^T dy``."""
    if k < 0:
        raise ValueError("order must be nonnegative")
    return shifted_moment_matrix(iset, (0,) * iset.n, k)


def localized_matrix(iset: IndexSet, psi: Polynomial, k: int) -> np.ndarray:
    """``A_k(psi) = int_Y psi v_k v_k^T dy``; PSD iff psi is in the k-th outer cone."""
    if psi.nvars != iset.n:
        raise ValueError(f"psi has {psi.nvars} variables, index set has dimension {iset.n}")
    N = len(graded_basis(iset.n, k))
    A = np.zeros((N, N))
    for e, c in psi.items():
        A += c * shifted_moment_matrix(iset, e, k)
    return A


def ball_volume(n: int) -> float:
    return pi ** (n / 2) / gamma(n / 2 + 1)


def range_basis(iset: IndexSet, k: int, rtol: float = 1e-10) -> np.ndarray:
    """Congruence ``W`` with ``W^T B_k W = I`` on the range of ``B_k``.

    For full-dimensional sets ``W = D C^-T`` where ``C C^T = D B_k D`` and
    ``D = diag(B_k)^(-1/2)``; since the basis is graded, the order-k block is
    a leading principal block of the order-(k+1) one. On the sphere the
    monomials are dependent (``sum y_i^2 = 1``) and ``B_k`` is singular for
    k >= 2; ``W`` then spans the range only. Its kernel lies in the kernel of
    every ``A_k(psi)``, so ``W^T A_k W >= 0`` iff ``A_k >= 0`` in both cases.
    """
    B = moment_matrix(iset, k)
    D = 1.0 / np.sqrt(np.diag(B))
    Bs = D[:, None] * B * D
    if iset.kind != SPHERE:
        C = np.linalg.cholesky(Bs)
        return D[:, None] * np.linalg.inv(C).T
    # rounding can leave a kernel direction slightly positive, so Cholesky
    # success says nothing here
    w, U = np.linalg.eigh(Bs)
    keep = w > rtol * w[-1]
    return D[:, None] * (U[:, keep] / np.sqrt(w[keep]))
