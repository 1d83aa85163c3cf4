import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsipp.fixtures import box_ellipse, sphere_disk
from fsipp.poly import BiPolynomial, Polynomial, basis_index, graded_basis, partial_apply, polynomial_from_callable

x1, x2 = Polynomial.variables(2)


def test_product_and_scale():
    a, = Polynomial.variables(1)
    assert (a + 1) * (a - 1) == a ** 2 - 1
    assert (x1 * x2).scale(0).is_zero()


def test_substitute():
    a, = Polynomial.variables(1)
    assert (a ** 2).substitute_affine([[2.0]], [0.0]) == (2 * a) ** 2
    assert (a ** 2).substitute_affine([[2.0]], [0.0]).coeff((2,)) == 4


def test_evaluate():
    f = (x1 + 1) ** 2 + (x2 + 1) ** 2
    assert f.evaluate([-0.5, -0.5]) == pytest.approx(0.5)
    h = 3 * x1 ** 3 - x2 + 7
    assert h.evaluate([0.0, 0.0]) == 7


def test_evaluate_bipolynomial():
    p = sphere_disk().p
    s = np.sqrt(2) / 2
    assert p.evaluate([s, s], [1.0, 0.0]) == pytest.approx(-3 / 8)


def test_derivatives():
    H = (x1 ** 2 + x2 ** 2).hessian()
    assert [[h.constant_term() for h in row] for row in H] == [[2, 0], [0, 2]]
    assert all(g.is_zero() for g in Polynomial.constant(5.0, 2).gradient())
    a, = Polynomial.variables(1)
    assert ((a + 1) ** 4).hessian()[0][0] == 12 * (a + 1) ** 2


def test_partial_apply_linear():
    (u1, u2), (v1,) = Polynomial.variables(3)[:2], Polynomial.variables(3)[2:]
    p = BiPolynomial.from_joint(u1 ** 2 + v1 ** 2 * u2 ** 2, 2, 1)
    L = {(0, 0): 1.0, (2, 0): 0.3, (0, 2): 0.7}
    q = partial_apply(p, "x", lambda e: L.get(tuple(e), 0.0))
    y, = Polynomial.variables(1)
    assert q == 0.3 + 0.7 * y ** 2


def test_box_ellipse_slices():
    p = box_ellipse().p
    s = x1 + x2
    assert p.at_y([1, 1]) == s * (s + 1)
    assert p.at_y([1, -1]) == (x1 - x2) ** 2 + x1 + x2


def test_graded_basis_order():
    assert graded_basis(2, 2) == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    assert len(graded_basis(3, 4)) == 35
    idx = basis_index(2, 3)
    assert all(idx[e] == i for i, e in enumerate(graded_basis(2, 3)))


def test_from_callable():
    h = polynomial_from_callable(lambda a, b: 1 + 2 * a - b ** 2, 2)
    assert h == 1 + 2 * x1 - x2 ** 2


def test_mismatched_nvars():
    with pytest.raises(ValueError):
        Polynomial.variable(0, 2) + Polynomial.variable(0, 3)


# ----------------------------------------------------------- properties

coefs = st.floats(-5, 5, allow_nan=False).map(lambda c: round(c, 3))
exps = st.tuples(st.integers(0, 3), st.integers(0, 3))
polys = st.dictionaries(exps, coefs, max_size=6).map(lambda d: Polynomial(d, 2))
points = st.tuples(st.floats(-1, 1), st.floats(-1, 1))


@given(polys, polys)
def test_product_degree(a, b):
    if a.is_zero() or b.is_zero():
        assert (a * b).is_zero()
    else:
        assert (a * b).degree() == a.degree() + b.degree()


@given(polys, polys, points)
def test_ring_homomorphism(a, b, u):
    assert (a * b).evaluate(u) == pytest.approx(a.evaluate(u) * b.evaluate(u), abs=1e-9)
    assert (a - b).evaluate(u) == pytest.approx(a.evaluate(u) - b.evaluate(u), abs=1e-9)


@settings(max_examples=50)
@given(polys, points)
def test_gradient_finite_difference(h, u):
    u = np.array(u)
    eps = 1e-6
    for i, g in enumerate(h.gradient()):
        e = np.zeros(2)
        e[i] = eps
        fd = (h.evaluate(u + e) - h.evaluate(u - e)) / (2 * eps)
        assert g.evaluate(u) == pytest.approx(fd, abs=1e-5)


@settings(max_examples=50)
@given(polys, points)
def test_hessian_symmetric_and_matches_gradient(h, u):
    H = h.hessian()
    grad = h.gradient()
    for i in range(2):
        for j in range(2):
            assert H[i][j] == H[j][i]
            assert H[i][j] == grad[i].diff(j)


def test_integer_arithmetic_is_exact():
    h = (3 * x1 - 2 * x2 + 5) ** 4
    assert all(float(c).is_integer() for c in h.terms.values())
    assert h.coeff((0, 0)) == 625 and h.coeff((4, 0)) == 81 and h.coeff((2, 2)) == 6 * 9 * 4
    assert len(h.terms) == 15
    assert ((x1 + x2) * (x1 - x2) - (x1 ** 2 - x2 ** 2)).is_zero()


@given(points, points)
def test_partial_apply_point_matches_evaluation(u, y):
    p = box_ellipse().p
    assert partial_apply(p, "x", u).evaluate(y) == pytest.approx(p.evaluate(u, y), abs=1e-12)
    assert partial_apply(p, "y", y).evaluate(u) == pytest.approx(p.evaluate(u, y), abs=1e-12)
