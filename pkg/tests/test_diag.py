import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsipp.diag import (
    RateConstants,
    chebyshev,
    default_volume_constants,
    estimate_rate_constants,
    gap_E,
    inner_min,
    lasserre_upper,
    max_over_set,
    needle,
    phi_lower,
    rate_bound,
    rate_constant,
)
from fsipp.fixtures import BUILDERS, TRIANGLE
from fsipp.moments import IndexSet
from fsipp.poly import Polynomial
from fsipp.relax import MomentFunctional, solve_relaxation

t, = Polynomial.variables(1)
y1, y2 = Polynomial.variables(2)
BOX1 = IndexSet.box(1)


def test_pencil_examples():
    assert lasserre_upper(BOX1, t * t, 1) == pytest.approx(1 / 3, abs=1e-12)
    for iset in (BOX1, IndexSet.sphere(2), IndexSet.from_simplices([TRIANGLE])):
        c = Polynomial.constant(2.5, iset.n)
        for k in (1, 3, 5):
            assert lasserre_upper(iset, c, k) == pytest.approx(2.5, abs=1e-9)


def test_pencil_bounds_and_monotone():
    psi = (y1 - 0.3) ** 2 + y2 ** 4 - y1 * y2
    for iset in (IndexSet.box(2), IndexSet.ball(2), IndexSet.sphere(2)):
        vals = [lasserre_upper(iset, psi, k) for k in range(1, 9)]
        low = inner_min(iset, psi)
        assert all(v >= low - 1e-9 for v in vals)
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_inner_min_examples():
    assert inner_min(BOX1, t * t) == pytest.approx(0.0, abs=1e-12)
    assert inner_min(BOX1, (t - 0.3) ** 2 + 0.1) == pytest.approx(0.1, abs=1e-10)
    assert inner_min(IndexSet.ball(2), y1 + y2) == pytest.approx(-np.sqrt(2), abs=1e-8)
    assert inner_min(IndexSet.sphere(2), y1 * y2) == pytest.approx(-0.5, abs=1e-8)
    assert max_over_set(IndexSet.from_simplices([TRIANGLE]), y1 - y2) == pytest.approx(0.0, abs=1e-9)


def test_max_over_high_dimensional_box():
    v = Polynomial.variables(5)
    psi = sum((vi - 0.2) ** 2 for vi in v)
    assert max_over_set(IndexSet.box(5), psi) == pytest.approx(5 * 1.2 ** 2, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 3))
def test_upper_above_inner_quadratics(a, b, s):
    psi = s * (y1 - a) ** 2 + (y2 - b) ** 2 + a * y1 * y2
    iset = IndexSet.box(2)
    assert lasserre_upper(iset, psi, 2) >= inner_min(iset, psi) - 1e-9


def test_gap_for_constant_and_fixture():
    prob = BUILDERS["box_ellipse"]()
    r = solve_relaxation(prob, 4)
    rep = gap_E(prob, r.functional, 4)
    assert rep.E > 0
    assert rep.E == pytest.approx(rep.upper - rep.inner)
    # a functional supported at the origin sees the constant psi = 0 on a p with no constant term
    delta = MomentFunctional(np.eye(1, 6, 0)[0], 2, 1)
    assert gap_E(prob, delta, 3).E == pytest.approx(0.0, abs=1e-9)


def test_chebyshev_branches():
    s = np.linspace(-1, 1, 101)
    for k in range(8):
        np.testing.assert_allclose(chebyshev(k, s), np.polynomial.chebyshev.chebval(s, [0] * k + [1]), atol=1e-12)
        out = np.array([1.0001, 1.5, 3.0, -1.2, -4.0])
        np.testing.assert_allclose(chebyshev(k, out), np.polynomial.chebyshev.chebval(out, [0] * k + [1]), rtol=1e-11)
    assert chebyshev(3, 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        chebyshev(-1, 0.5)


def test_needle_and_phi():
    assert needle(5, 0.3, 0.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        needle(3, 1.0, 0.0)
    tt = np.linspace(0, 2, 401)
    for k in (1, 2, 5, 10):
        # v(sqrt(s)) is a degree-2k polynomial in s, nonnegative, 1 at 0, <= 1 on [0, 1]
        prof = needle(k, 0.5, np.sqrt(np.minimum(tt, 1.0)))
        assert np.all(phi_lower(2 * k, tt)[tt <= 1] <= prof[tt <= 1] + 1e-12)
    assert phi_lower(2, 0.0) == 1.0 and phi_lower(2, 1.0) == 0.0
    with pytest.raises(ValueError):
        phi_lower(2, -0.1)


def test_rate_bound():
    assert rate_constant(1, 1.0) == pytest.approx(64.0)
    c = RateConstants(0.0, 1.0, 1.0, 1.0, 1)
    assert rate_bound(c, 10) == 0.0
    c = RateConstants(1.0, 0.0, 0.5, 1.0, 2)
    vals = [rate_bound(c, k) for k in range(8, 200)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        rate_bound(c, 1)
    with pytest.raises(ValueError):
        RateConstants(1.0, 0.0, 1.5, 1.0, 1)


def test_volume_constants():
    assert default_volume_constants(IndexSet.box(2)) == (0.25, 2.0)
    assert default_volume_constants(IndexSet.ball(3)) == (0.125, 1.0)
    with pytest.raises(ValueError):
        default_volume_constants(IndexSet.sphere(2))
    c = estimate_rate_constants(IndexSet.box(2), y1 ** 2 + y2)
    assert c.B1 == pytest.approx(np.sqrt(5), rel=1e-9)
    assert c.B2 == pytest.approx(2.0)


def test_chebyshev_continuous_at_endpoints():
    for k in range(12):
        for s in (1.0, -1.0):
            inner = chebyshev(k, s)
            outer = chebyshev(k, s * (1 + 1e-15))
            assert abs(inner - outer) <= 1e-12 * max(1.0, k * k)
            assert inner == pytest.approx(s ** k, abs=1e-12)


def test_pencil_order_zero():
    psi = (y1 - 0.3) ** 2 + y2
    iset = IndexSet.box(2)
    vals = [lasserre_upper(iset, psi, k) for k in range(0, 6)]
    # order 0 is the plain average of psi over Y
    assert vals[0] == pytest.approx((4 / 3 + 0.09 * 4) / 4)
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
