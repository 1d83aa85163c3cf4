"""Sparse multivariate polynomials over a single variable block, and
polynomials in two blocks ``p(x, y)``.

Exponent vectors are plain tuples of ints. Coefficients are Python floats;
integer inputs stay exact as long as they are representable in a double.
"""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from math import comb
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple


@lru_cache(maxsize=None)
def graded_basis(nvars: int, order: int) -> tuple:
    """Exponents of all monomials of degree <= order, graded-lex ordered.

    Within one degree, exponents are sorted in descending lexicographic
    order, so the basis reads ``1, x1, x2, x1^2, x1*x2, x2^2, ...``.
    """
    if nvars < 0 or order < 0:
        raise ValueError("nvars and order must be nonnegative")
    out = []
    for deg in range(order + 1):
        out.extend(sorted(_compositions(deg, nvars), reverse=True))
    assert len(out) == comb(nvars + order, order)
    return tuple(out)


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def basis_index(nvars: int, order: int) -> dict:
    return {e: i for i, e in enumerate(graded_basis(nvars, order))}


def add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(i + j for i, j in zip(a, b))


class Polynomial:
    """Immutable sparse polynomial in ``nvars`` variables."""

    __slots__ = ("_terms", "nvars", "_hash")

    def __init__(self, terms: Mapping[Exponent, float] | Iterable = (), nvars: int | None = None):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = defaultdict(float)
        for exp, coef in items:
            exp = tuple(int(e) for e in exp)
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            if nvars is None:
                nvars = len(exp)
            elif len(exp) != nvars:
                raise ValueError(f"exponent {exp} does not have length {nvars}")
            acc[exp] += float(coef)
        if nvars is None:
            raise ValueError("cannot infer the number of variables of an empty polynomial")
        self._terms = {e: c for e, c in acc.items() if c != 0.0}
        self.nvars = nvars
        self._hash = None

    # construction helpers
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls({}, nvars)

    @classmethod
    def constant(cls, value: float, nvars: int) -> "Polynomial":
        return cls({(0,) * nvars: value}, nvars)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "Polynomial":
        if not 0 <= i < nvars:
            raise ValueError(f"variable index {i} out of range for {nvars} variables")
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1.0}, nvars)

    @classmethod
    def variables(cls, nvars: int) -> list:
        return [cls.variable(i, nvars) for i in range(nvars)]

    @classmethod
    def monomial(cls, exp: Sequence[int], coef: float = 1.0) -> "Polynomial":
        return cls({tuple(exp): coef}, len(exp))

    # accessors
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, exp: Sequence[int]) -> float:
        return self._terms.get(tuple(exp), 0.0)

    def constant_term(self) -> float:
        return self._terms.get((0,) * self.nvars, 0.0)

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self._terms)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def coefficient_vector(self, order: int | None = None) -> np.ndarray:
        """Dense coefficients over ``graded_basis(nvars, order)``."""
        order = self.degree() if order is None else order
        idx = basis_index(self.nvars, order)
        v = np.zeros(len(idx))
        for e, c in self._terms.items():
            if sum(e) > order:
                raise ValueError(f"degree {sum(e)} exceeds requested order {order}")
            v[idx[e]] = c
        return v

    # arithmetic
    def _check(self, other: "Polynomial"):
        if self.nvars != other.nvars:
            raise ValueError(f"dimension mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Polynomial.constant(float(other), self.nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for e, c in other._terms.items():
            acc[e] = acc.get(e, 0.0) + c
        return Polynomial(acc, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({e: -c for e, c in self._terms.items()}, self.nvars)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return self.scale(float(other))
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check(other)
        acc: dict = defaultdict(float)
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                acc[add_exp(ea, eb)] += ca * cb
        return Polynomial(acc, self.nvars)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return self.scale(1.0 / float(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = Polynomial.constant(1.0, self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c: float) -> "Polynomial":
        return Polynomial({e: c * v for e, v in self._terms.items()}, self.nvars)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for e in sorted(self._terms, key=lambda e: (sum(e), tuple(-i for i in e))):
            c = self._terms[e]
            mono = "*".join(
                f"x{i + 1}" + (f"^{p}" if p > 1 else "") for i, p in enumerate(e) if p
            )
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # evaluation and calculus
    def __call__(self, u) -> float | np.ndarray:
        return self.evaluate(u)

    def evaluate(self, u) -> float | np.ndarray:
        """Evaluate at a point, or at a stack of points with shape ``(..., nvars)``."""
        u = np.asarray(u, dtype=float)
        if u.shape[-1:] != (self.nvars,) and not (self.nvars == 0 and u.size == 0):
            raise ValueError(f"point has shape {u.shape}, expected trailing dimension {self.nvars}")
        out = np.zeros(u.shape[:-1])
        if not self._terms:
            return out if out.ndim else 0.0
        maxdeg = [max(e[i] for e in self._terms) for i in range(self.nvars)]
        powers = [
            np.stack([u[..., i] ** p for p in range(maxdeg[i] + 1)], axis=-1) for i in range(self.nvars)
        ]
        for e, c in self._terms.items():
            term = np.full(u.shape[:-1], c)
            for i, p in enumerate(e):
                if p:
                    term = term * powers[i][..., p]
            out = out + term
        return float(out) if out.ndim == 0 else out

    def diff(self, i: int) -> "Polynomial":
        acc = {}
        for e, c in self._terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                acc[tuple(ne)] = c * e[i]
        return Polynomial(acc, self.nvars)

    def gradient(self) -> list:
        return [self.diff(i) for i in range(self.nvars)]

    def hessian(self) -> list:
        g = self.gradient()
        H = [[None] * self.nvars for _ in range(self.nvars)]
        for i in range(self.nvars):
            for j in range(i, self.nvars):
                H[i][j] = H[j][i] = g[i].diff(j)
        return H

    def substitute_affine(self, A, b) -> "Polynomial":
        """Compose with ``u = A z + b``; the result is a polynomial in z."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != self.nvars or b.shape[0] != self.nvars:
            raise ValueError(f"affine map has shape {A.shape}/{b.shape}, expected {self.nvars} rows")
        nz = A.shape[1]
        images = [
            Polynomial({**{tuple(int(j == l) for j in range(nz)): A[i, l] for l in range(nz)}, (0,) * nz: b[i]}, nz)
            for i in range(self.nvars)
        ]
        return self.compose(images)

    def compose(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute ``x_i -> images[i]`` (all images share a variable block)."""
        if len(images) != self.nvars:
            raise ValueError(f"need {self.nvars} images, got {len(images)}")
        if self.nvars == 0:
            raise ValueError("cannot compose a polynomial with no variables")
        nz = images[0].nvars
        cache: dict = {}

        def power(i, p):
            key = (i, p)
            if key not in cache:
                cache[key] = images[i] ** p
            return cache[key]

        out = Polynomial.zero(nz)
        for e, c in self._terms.items():
            term = Polynomial.constant(c, nz)
            for i, p in enumerate(e):
                if p:
                    term = term * power(i, p)
            out = out + term
        return out

    def embed(self, nvars: int, offset: int = 0) -> "Polynomial":
        """Same polynomial viewed in a larger variable block starting at ``offset``."""
        if offset + self.nvars > nvars:
            raise ValueError("embedding does not fit")
        acc = {}
        for e, c in self._terms.items():
            ne = [0] * nvars
            ne[offset:offset + self.nvars] = e
            acc[tuple(ne)] = c
        return Polynomial(acc, nvars)

    def apply_functional(self, values: Mapping | Callable) -> float:
        """``L(h)`` for a functional given by its monomial values."""
        get = values if callable(values) else values.__getitem__
        return float(sum(c * get(e) for e, c in self._terms.items()))


class BiPolynomial:
    """Polynomial ``p(x, y)`` in two variable blocks of sizes ``xdim`` and ``ydim``."""

    __slots__ = ("_terms", "xdim", "ydim")

    def __init__(self, terms: Mapping | Iterable, xdim: int, ydim: int):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = defaultdict(float)
        for (ex, ey), c in items:
            ex, ey = tuple(int(v) for v in ex), tuple(int(v) for v in ey)
            if len(ex) != xdim or len(ey) != ydim:
                raise ValueError(f"exponent pair {ex}, {ey} does not match dims ({xdim}, {ydim})")
            if any(v < 0 for v in ex + ey):
                raise ValueError("negative exponent")
            acc[(ex, ey)] += float(c)
        self._terms = {k: c for k, c in acc.items() if c != 0.0}
        self.xdim = xdim
        self.ydim = ydim

    @classmethod
    def from_joint(cls, h: Polynomial, xdim: int, ydim: int) -> "BiPolynomial":
        """Split a polynomial in ``(x, y)`` (x variables first)."""
        if h.nvars != xdim + ydim:
            raise ValueError("joint polynomial has the wrong number of variables")
        return cls({(e[:xdim], e[xdim:]): c for e, c in h.items()}, xdim, ydim)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def deg_x(self) -> int:
        return max((sum(ex) for ex, _ in self._terms), default=0)

    def deg_y(self) -> int:
        return max((sum(ey) for _, ey in self._terms), default=0)

    def joint(self) -> Polynomial:
        return Polynomial({ex + ey: c for (ex, ey), c in self._terms.items()}, self.xdim + self.ydim)

    def x_coefficients(self) -> dict:
        """``{alpha: p_alpha(y)}`` with ``p = sum_alpha p_alpha(y) x^alpha``."""
        acc: dict = defaultdict(dict)
        for (ex, ey), c in self._terms.items():
            acc[ex][ey] = c
        return {ex: Polynomial(t, self.ydim) for ex, t in acc.items()}

    def y_coefficients(self) -> dict:
        """``{beta: p_beta(x)}`` with ``p = sum_beta p_beta(x) y^beta``."""
        acc: dict = defaultdict(dict)
        for (ex, ey), c in self._terms.items():
            acc[ey][ex] = c
        return {ey: Polynomial(t, self.xdim) for ey, t in acc.items()}

    @classmethod
    def from_x_coefficients(cls, coeffs: Mapping, xdim: int, ydim: int) -> "BiPolynomial":
        return cls({(ex, ey): c for ex, py in coeffs.items() for ey, c in py.items()}, xdim, ydim)

    def at_y(self, y) -> Polynomial:
        """``p(., y)`` as a polynomial in x."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.ydim,):
            raise ValueError(f"y has shape {y.shape}, expected ({self.ydim},)")
        acc: dict = defaultdict(float)
        for (ex, ey), c in self._terms.items():
            acc[ex] += c * float(np.prod(y ** np.array(ey))) if ey else c
        return Polynomial(acc, self.xdim)

    def at_x(self, x) -> Polynomial:
        """``p(x, .)`` as a polynomial in y."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.xdim,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.xdim},)")
        acc: dict = defaultdict(float)
        for (ex, ey), c in self._terms.items():
            acc[ey] += c * float(np.prod(x ** np.array(ex))) if ex else c
        return Polynomial(acc, self.ydim)

    def evaluate(self, x, y) -> float:
        return self.at_y(y).evaluate(x)

    def hessian_x(self) -> list:
        """Hessian in x; entries are BiPolynomials."""
        joint = self.joint()
        H = [[None] * self.xdim for _ in range(self.xdim)]
        for i in range(self.xdim):
            gi = joint.diff(i)
            for j in range(i, self.xdim):
                H[i][j] = H[j][i] = BiPolynomial.from_joint(gi.diff(j), self.xdim, self.ydim)
        return H

    def __eq__(self, other):
        if not isinstance(other, BiPolynomial):
            return NotImplemented
        return (self.xdim, self.ydim, self._terms) == (other.xdim, other.ydim, other._terms)

    def __hash__(self):
        return hash((self.xdim, self.ydim, frozenset(self._terms.items())))

    def __repr__(self):
        return f"BiPolynomial({len(self._terms)} terms, xdim={self.xdim}, ydim={self.ydim})"


def partial_apply(p: BiPolynomial, side: str, values) -> Polynomial:
    """Apply a linear functional or a point to one block of ``p``.

    ``side="x"`` with a functional (mapping or callable on x-exponents)
    returns ``sum_alpha L(x^alpha) p_alpha(y)``; with a point it returns
    ``p(u, .)``. ``side="y"`` is symmetric and returns a polynomial in x.
    """
    if side not in ("x", "y"):
        raise ValueError("side must be 'x' or 'y'")
    if isinstance(values, Mapping) or callable(values):
        get = values if callable(values) else values.__getitem__
        coeffs = p.x_coefficients() if side == "x" else p.y_coefficients()
        dim = p.xdim if side == "x" else p.ydim
        other = p.ydim if side == "x" else p.xdim
        out = Polynomial.zero(other)
        for e, poly in coeffs.items():
            if len(e) != dim:
                raise ValueError("functional dimension mismatch")
            out = out + poly.scale(get(e))
        return out
    point = np.asarray(values, dtype=float)
    if side == "x":
        if point.shape != (p.xdim,):
            raise ValueError(f"point has shape {point.shape}, expected ({p.xdim},)")
        return p.at_x(point)
    if point.shape != (p.ydim,):
        raise ValueError(f"point has shape {point.shape}, expected ({p.ydim},)")
    return p.at_y(point)


def polynomial_from_callable(fn: Callable, nvars: int) -> Polynomial:
    """Build a polynomial from an expression over ``Polynomial.variables``."""
    return fn(*Polynomial.variables(nvars))

