"""Gram-matrix certificates for sums of squares and s.o.s-convexity.

A polynomial ``h`` is SOS iff ``h = v^T G v`` for some PSD ``G``. Each test
maximizes the smallest eigenvalue ``lam`` of the Gram matrices subject to
coefficient matching; ``lam`` well below zero is a rejection, ``lam`` near
zero is accepted only if the PSD-clipped Gram still reproduces ``h``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .moments import BALL, SPHERE
from .poly import BiPolynomial, Polynomial, add_exp, graded_basis
from .sdp import ConicProgram, NumericalTrouble, PsdBlock, phase_one

PASS, FAIL, INCONCLUSIVE, POINTWISE = "pass", "fail", "inconclusive", "pointwise only"

ACCEPT_MARGIN = -1e-8
REJECT_MARGIN = -1e-6
MAX_RESIDUAL = 1e-7
MAX_GRAM_VARIABLES = 5000


@dataclass
class SosCertificate:
    """``target = v^T gram v + sum multiplier * w^T G w`` up to ``residual``."""

    basis: tuple
    gram: np.ndarray
    residual: float
    # extra (multiplier, basis, gram) triples for localized certificates
    localized: list = field(default_factory=list)
    target: Polynomial | None = None

    def reconstruct(self) -> Polynomial:
        nv = len(self.basis[0])
        out = Polynomial.zero(nv)
        one = Polynomial.constant(1.0, nv)
        for mult, basis, G in [(one, self.basis, self.gram), *self.localized]:
            v = [Polynomial.monomial(e) for e in basis]
            for i, j in itertools.product(range(len(basis)), repeat=2):
                if G[i, j] != 0:
                    out = out + mult * (v[i] * v[j]).scale(G[i, j])
        return out


@dataclass
class SosResult:
    status: str
    certificate: SosCertificate | None = None
    margin: float = float("nan")
    message: str = ""

    @property
    def accepted(self) -> bool:
        return self.status == PASS


def _gram_test(q: Polynomial, blocks: list) -> SosResult:
    """Search for PSD ``G_b`` with ``q = sum_b mult_b * v_b^T G_b v_b``.

    ``blocks`` is a list of ``(multiplier, basis)`` pairs.
    """
    scale = q.max_abs_coeff() or 1.0
    # variable layout: upper triangle of each Gram, row-major
    offsets, nv = [], 0
    for _, basis in blocks:
        offsets.append(nv)
        nv += len(basis) * (len(basis) + 1) // 2
    rows: dict = {}
    psd = []
    for (mult, basis), off in zip(blocks, offsets):
        s = len(basis)
        mats = {}
        var = off
        for i in range(s):
            for j in range(i, s):
                base = add_exp(basis[i], basis[j])
                w = 1.0 if i == j else 2.0
                for e, c in mult.items():
                    row = rows.setdefault(add_exp(base, e), {})
                    row[var] = row.get(var, 0.0) + w * c
                E = np.zeros((s, s))
                E[i, j] = E[j, i] = 1.0
                mats[var] = E
                var += 1
        psd.append(PsdBlock.from_matrices(np.zeros((s, s)), mats, nv))
    missing = [e for e in q.terms if e not in rows]
    if missing:
        return SosResult(FAIL, message=f"monomial {missing[0]} cannot be produced by the Gram basis")
    keys = sorted(rows)
    A = np.zeros((len(keys), nv))
    for r, e in enumerate(keys):
        for v, c in rows[e].items():
            A[r, v] = c
    b = np.array([q.coeff(e) / scale for e in keys])
    try:
        t, sol = phase_one(ConicProgram(np.zeros(nv), psd, A, b))
    except NumericalTrouble as exc:
        return SosResult(INCONCLUSIVE, message=str(exc))
    if t == -np.inf:
        return SosResult(FAIL, margin=t, message="coefficient matching is infeasible")
    if t < REJECT_MARGIN:
        return SosResult(FAIL, margin=t, message=f"no PSD Gram matrix (margin {t:.3g})")
    if t < ACCEPT_MARGIN:
        return SosResult(INCONCLUSIVE, margin=t, message=f"margin {t:.3g} within solver tolerance")

    grams = []
    for blk in psd:
        G = blk.evaluate(sol.z[:nv])
        w, U = np.linalg.eigh(G)
        grams.append(scale * (U * np.clip(w, 0, None)) @ U.T)
    localized = [(mult, basis, G) for (mult, basis), G in zip(blocks[1:], grams[1:])]
    cert = SosCertificate(tuple(blocks[0][1]), grams[0], 0.0, localized, q)
    cert.residual = (cert.reconstruct() - q).max_abs_coeff()
    if cert.residual > MAX_RESIDUAL:
        return SosResult(INCONCLUSIVE, margin=t, message=f"clipped Gram residual {cert.residual:.3g}")
    return SosResult(PASS, cert, t)


def certify_sos(h: Polynomial) -> SosResult:
    deg = h.degree()
    if h.is_zero():
        basis = graded_basis(h.nvars, 0)
        return SosResult(PASS, SosCertificate(basis, np.zeros((1, 1)), 0.0, target=h), 0.0)
    if deg % 2:
        return SosResult(FAIL, message=f"odd degree {deg}")
    one = Polynomial.constant(1.0, h.nvars)
    return _gram_test(h, [(one, graded_basis(h.nvars, deg // 2))])


def _hessian_form(h: Polynomial) -> Polynomial:
    """``z^T hess(h)(x) z`` in variables ``(x, z)``."""
    m = h.nvars
    H = h.hessian()
    z = [Polynomial.variable(m + i, 2 * m) for i in range(m)]
    q = Polynomial.zero(2 * m)
    for i in range(m):
        for j in range(m):
            if not H[i][j].is_zero():
                q = q + H[i][j].embed(2 * m) * z[i] * z[j]
    return q


def _bilinear_basis(m: int, xdeg: int, extra: int = 0, ydeg: int = 0) -> list:
    """Monomials ``x^a z_i y^b`` with ``|a| <= xdeg`` and ``|b| <= ydeg``
    in variables ``(x, z, y)`` where ``y`` has ``extra`` components."""
    out = []
    for a in graded_basis(m, xdeg):
        for b in graded_basis(extra, ydeg) if extra else [()]:
            for i in range(m):
                zi = tuple(1 if r == i else 0 for r in range(m))
                out.append(tuple(a) + zi + tuple(b))
    return out


def certify_sos_convex(h: Polynomial) -> SosResult:
    """Accept iff ``z^T hess(h)(x) z`` is SOS in ``(x, z)``."""
    m, deg = h.nvars, h.degree()
    if deg <= 2:
        # constant Hessian: s.o.s-convex iff PSD
        H = np.array([[e.constant_term() for e in row] for row in h.hessian()])
        lam = float(np.linalg.eigvalsh(H)[0]) if m else 0.0
        if lam < REJECT_MARGIN * max(1.0, np.abs(H).max(initial=0)):
            return SosResult(FAIL, margin=lam, message=f"Hessian has eigenvalue {lam:.3g}")
        if lam < ACCEPT_MARGIN:
            return SosResult(INCONCLUSIVE, margin=lam)
        basis = tuple(_bilinear_basis(m, 0))
        return SosResult(PASS, SosCertificate(basis, H, 0.0, target=_hessian_form(h)), lam)
    q = _hessian_form(h)
    one = Polynomial.constant(1.0, 2 * m)
    return _gram_test(q, [(one, _bilinear_basis(m, (deg - 2) // 2))])


# ------------------------------------------------------------ problem level

def _parametric_hessian_form(p: BiPolynomial) -> Polynomial:
    """``z^T hess_x p(x, y) z`` in variables ``(x, z, y)``."""
    m, n = p.xdim, p.ydim
    q = Polynomial.zero(2 * m + n)
    H = p.hessian_x()
    for i in range(m):
        for j in range(m):
            terms = {}
            for (a, b), c in H[i][j].items():
                e = list(a) + [0] * m + list(b)
                e[m + i] += 1
                e[m + j] += 1
                e = tuple(e)
                terms[e] = terms.get(e, 0.0) + c
            q = q + Polynomial(terms, 2 * m + n)
    return q


def _joint_test(p: BiPolynomial, iset=None) -> SosResult | None:
    """Certificate ``q = s0 + sum_i (1 - y_i^2) s_i`` over the box hull of Y, plus
    a ``(1 - |y|^2) s`` term for balls and spheres; None when too large."""
    m, n = p.xdim, p.ydim
    q = _parametric_hessian_form(p)
    xdeg = max(0, (p.deg_x() - 2) // 2)
    t = ceil(max(0, p.deg_y()) / 2) + 1
    b0 = _bilinear_basis(m, xdeg, n, t)
    bi = _bilinear_basis(m, xdeg, n, t - 1)
    N = 2 * m + n
    ys = [Polynomial.variable(2 * m + i, N) for i in range(n)]
    mults = [1 - y * y for y in ys]
    if iset is not None and iset.kind in (BALL, SPHERE):
        mults.append(1 - sum((y * y for y in ys), Polynomial.zero(N)))
    size = len(b0) * (len(b0) + 1) // 2 + len(mults) * len(bi) * (len(bi) + 1) // 2
    if size > MAX_GRAM_VARIABLES:
        return None
    blocks = [(Polynomial.constant(1.0, N), b0)] + [(g, bi) for g in mults]
    return _gram_test(q, blocks)


def sample_points(iset, per_axis: int = 11, limit: int = 1000, seed: int = 0) -> np.ndarray:
    """Deterministic sample of the index set for pointwise checks."""
    n = iset.n
    if n <= 3:
        axis = np.linspace(-1, 1, per_axis)
        pts = np.array(list(itertools.product(axis, repeat=n)))
    else:
        pts = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))
        if len(pts) > limit:
            pts = pts[np.random.default_rng(seed).choice(len(pts), limit, replace=False)]
    if iset.kind == SPHERE:
        r = np.linalg.norm(pts, axis=1)
        pts = pts[r > 0] / r[r > 0, None]
    return pts[iset.contains(pts, tol=1e-9)]


def _pointwise(p: BiPolynomial, iset) -> SosResult:
    worst = None
    for y in sample_points(iset):
        res = certify_sos_convex(p.at_y(y))
        if res.status == FAIL:
            return SosResult(FAIL, margin=res.margin, message=f"p(., y) not s.o.s-convex at y = {np.round(y, 6).tolist()}")
        if res.status == INCONCLUSIVE:
            worst = res
    if worst is not None:
        return SosResult(INCONCLUSIVE, margin=worst.margin, message="some sample points were inconclusive")
    return SosResult(POINTWISE, message="certified on sample points of Y only")


@dataclass
class ValidationReport:
    items: dict

    @property
    def failed(self) -> list:
        return [k for k, v in self.items.items() if v.status == FAIL]

    @property
    def passed(self) -> bool:
        return all(v.status in (PASS, POINTWISE) for v in self.items.values())

    def lines(self) -> list:
        return [f"{name}: {res.status}" + (f" ({res.message})" if res.message else "") for name, res in self.items.items()]


def validate_problem(prob) -> ValidationReport:
    """Certify ``f``, ``-g`` and each ``phi_j`` s.o.s-convex, and ``p(., y)``
    for all ``y`` via the joint test (pointwise fallback)."""
    items = {"f": certify_sos_convex(prob.f), "-g": certify_sos_convex(-prob.g)}
    for j, q in enumerate(prob.phi):
        items[f"phi[{j}]"] = certify_sos_convex(q)
    joint = _joint_test(prob.p, prob.Y)
    if joint is not None and joint.status == PASS:
        items["p"] = joint
    else:
        items["p"] = _pointwise(prob.p, prob.Y)
    return ValidationReport(items)
