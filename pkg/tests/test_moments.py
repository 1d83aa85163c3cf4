from math import pi

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fsipp.fixtures import TRIANGLE
from fsipp.moments import (
    IndexSet,
    localized_matrix,
    moment,
    moment_matrix,
    moment_table,
    range_basis,
)
from fsipp.poly import Polynomial, graded_basis

SETS = [IndexSet.box(2), IndexSet.ball(2), IndexSet.sphere(2), IndexSet.from_simplices([TRIANGLE]), IndexSet.box(1)]


def test_closed_forms():
    assert moment(IndexSet.box(2), (0, 0)) == pytest.approx(4)
    assert moment(IndexSet.box(2), (2, 2)) == pytest.approx(4 / 9)
    assert moment(IndexSet.sphere(2), (0, 0)) == pytest.approx(2 * pi)
    assert moment(IndexSet.ball(2), (2, 0)) == pytest.approx(pi / 4)
    std = IndexSet.from_simplices([((0, 0), (1, 0), (0, 1))])
    assert moment(std, (1, 1)) == pytest.approx(1 / 24)


def test_odd_moments_vanish_on_symmetric_sets():
    for iset in (IndexSet.box(3), IndexSet.ball(3), IndexSet.sphere(3)):
        assert moment(iset, (1, 2, 0)) == 0
        assert moment(iset, (3, 0, 1)) == 0


def test_moment_matrices():
    np.testing.assert_allclose(moment_matrix(IndexSet.box(1), 1), [[2, 0], [0, 2 / 3]])
    np.testing.assert_allclose(moment_matrix(IndexSet.ball(2), 1), np.diag([pi, pi / 4, pi / 4]))
    for iset in SETS:
        assert moment_matrix(iset, 0)[0, 0] == pytest.approx(moment(iset, (0,) * iset.n))


def test_localized_matrices():
    t = Polynomial.variable(0, 1)
    np.testing.assert_allclose(localized_matrix(IndexSet.box(1), t, 1), [[0, 2 / 3], [2 / 3, 0]])
    for iset in SETS:
        one = Polynomial.constant(1.0, iset.n)
        np.testing.assert_allclose(localized_matrix(iset, one, 2), moment_matrix(iset, 2))


@pytest.mark.parametrize("iset", SETS, ids=lambda s: f"{s.kind}{s.n}")
def test_nonnegative_weight_gives_psd(iset):
    y1 = Polynomial.variable(0, iset.n)
    for k in range(1, 6):
        M = localized_matrix(iset, y1 * y1, k)
        assert np.linalg.eigvalsh(M)[0] >= -1e-10 * np.abs(M).max()


@pytest.mark.parametrize("iset", SETS, ids=lambda s: f"{s.kind}{s.n}")
def test_moment_matrix_nesting(iset):
    big = moment_matrix(iset, 4)
    for k in range(4):
        s = len(graded_basis(iset.n, k))
        np.testing.assert_allclose(big[:s, :s], moment_matrix(iset, k), rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("iset", [IndexSet.box(2), IndexSet.ball(2), IndexSet.from_simplices([TRIANGLE]), IndexSet.box(3)],
                         ids=lambda s: f"{s.kind}{s.n}")
def test_full_dimensional_sets_are_positive_definite(iset):
    for k in range(1, 9):
        W = range_basis(iset, k)
        assert W.shape[1] == len(graded_basis(iset.n, k))
        np.testing.assert_allclose(W.T @ moment_matrix(iset, k) @ W, np.eye(W.shape[1]), atol=1e-6)


def test_circle_moment_matrix_rank():
    iset = IndexSet.sphere(2)
    for k in range(1, 9):
        M = moment_matrix(iset, k)
        w = np.linalg.eigvalsh(M)
        assert w[0] >= -1e-9 * w[-1]
        # harmonics of degree <= k on the circle
        assert range_basis(iset, k).shape[1] == 2 * k + 1


def test_moment_table_cache():
    iset = IndexSet.ball(2)
    table = moment_table(iset, 6)
    assert table[(4, 2)] == pytest.approx(moment(iset, (4, 2)))


def test_polytope_triangulation_matches_box():
    sq = IndexSet.from_polytope([(-1, -1), (1, -1), (1, 1), (-1, 1), (0, 0.5)])
    for beta in graded_basis(2, 5):
        assert moment(sq, beta) == pytest.approx(moment(IndexSet.box(2), beta), rel=1e-12, abs=1e-14)


def test_contains():
    tri = IndexSet.from_simplices([TRIANGLE])
    assert tri.contains(np.array([[-0.5, 0.5], [0.5, -0.5]])).tolist() == [True, False]
    assert IndexSet.sphere(2).contains(np.array([[0.6, 0.8], [0.5, 0.5]]), tol=1e-9).tolist() == [True, False]


@pytest.mark.parametrize("bad", [
    lambda: IndexSet("cube", 2),
    lambda: IndexSet.box(0),
    lambda: IndexSet.from_simplices([((0, 0), (1, 0), (2, 0))]),
    lambda: IndexSet.from_simplices([((0, 0), (3, 0), (0, 1))]),
])
def test_invalid_sets(bad):
    with pytest.raises(ValueError):
        bad()


@given(st.tuples(st.integers(0, 6), st.integers(0, 6)))
def test_box_formula(beta):
    expected = np.prod([2 / (b + 1) if b % 2 == 0 else 0.0 for b in beta])
    assert moment(IndexSet.box(2), beta) == pytest.approx(expected, abs=1e-15)


@given(st.tuples(st.integers(0, 5), st.integers(0, 5)))
def test_ball_from_sphere(beta):
    # integrating r^(|beta| + 1) dr over the unit interval links the two sets
    b = sum(beta)
    assert moment(IndexSet.ball(2), beta) == pytest.approx(moment(IndexSet.sphere(2), beta) / (b + 2), abs=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_outer_cones_are_nested(seed):
    # A_k2(psi) >= 0 implies A_k1(psi) >= 0
    rng = np.random.default_rng(seed)
    iset = IndexSet.box(2)
    y = Polynomial.variables(2)
    c = rng.uniform(-1, 1, 6)
    psi = c[0] + c[1] * y[0] + c[2] * y[1] + c[3] * y[0] ** 2 + c[4] * y[0] * y[1] + c[5] * y[1] ** 2
    mins = []
    for k in range(1, 6):
        W = range_basis(iset, k)
        mins.append(np.linalg.eigvalsh(W.T @ localized_matrix(iset, psi, k) @ W)[0])
    # the smallest generalized eigenvalue never increases with k
    assert all(b <= a + 1e-9 for a, b in zip(mins, mins[1:]))
