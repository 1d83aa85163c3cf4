import numpy as np
import pytest

from fsipp.fixtures import BUILDERS
from fsipp.relax import build_dual, solve_relaxation
from fsipp.sdp import ConicProgram, PsdBlock, Status, export_sdpa, feasible, import_sdpa, phase_one, solve


def block(F0, mats, n, name=""):
    return PsdBlock.from_matrices(np.asarray(F0, float), {i: np.asarray(M, float) for i, M in mats.items()}, n, name)


def test_scalar_block():
    sol = solve(ConicProgram([1.0], [block([[0.0]], {0: [[1.0]]}, 1)]))
    assert sol.status == Status.OPTIMAL
    assert sol.z[0] == pytest.approx(0.0, abs=1e-7)


def test_two_by_two_block():
    prog = ConicProgram([1.0], [block([[0, 1], [1, 0]], {0: np.eye(2)}, 1)])
    sol = solve(prog)
    assert sol.z[0] == pytest.approx(1.0, abs=1e-7)
    assert sol.gap <= 1e-8


def test_gram_lower_bound_of_square():
    # max rho s.t. t^2 - rho = [1 t] G [1 t]^T with G >= 0; variables (rho, g00, g01, g11)
    mats = {1: [[1, 0], [0, 0]], 2: [[0, 1], [1, 0]], 3: [[0, 0], [0, 1]]}
    A = [[1, 1, 0, 0], [0, 0, 2, 0], [0, 0, 0, 1]]
    prog = ConicProgram([-1.0, 0, 0, 0], [block(np.zeros((2, 2)), mats, 4)], A, [0.0, 0.0, 1.0])
    sol = solve(prog)
    assert sol.status == Status.OPTIMAL
    assert sol.z[0] == pytest.approx(0.0, abs=1e-7)


def test_infeasible_and_unbounded():
    assert solve(ConicProgram([1.0], [block([[-1.0]], {}, 1)], [[1.0]], [0.0])).status == Status.INFEASIBLE
    assert solve(ConicProgram([1.0], [block([[0.0]], {0: [[-1.0]]}, 1)])).status == Status.UNBOUNDED


def test_feasibility():
    assert feasible(ConicProgram([0.0]))
    assert not feasible(ConicProgram([0.0], [block([[-1.0]], {}, 1)], [[1.0]], [0.0]))
    t, _ = phase_one(ConicProgram([0.0], [block([[0.5]], {}, 1)], [[1.0]], [0.0]))
    assert t == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("s", [1e-3, 1.0, 1e3])
def test_objective_scaling(s):
    prog = ConicProgram([s], [block([[0, 1], [1, 0]], {0: np.eye(2)}, 1)])
    sol = solve(prog)
    assert sol.objective_value == pytest.approx(s, rel=1e-7)


def test_shape_validation():
    with pytest.raises(ValueError):
        ConicProgram([1.0], [block([[0.0, 1.0], [0.0, 0.0]], {}, 1)])
    with pytest.raises(ValueError):
        block([[0.0]], {0: [[1.0, 0.0], [0.0, 1.0]]}, 1)
    with pytest.raises(ValueError):
        ConicProgram([1.0, 2.0], [block([[0.0]], {0: [[1.0]]}, 1)])


def test_minimal_sdpa_file(tmp_path):
    prog = ConicProgram([1.0], [block([[0.0]], {0: [[1.0]]}, 1)])
    text = export_sdpa(prog, tmp_path / "p.dat-s").read_text().splitlines()
    assert text == ["1", "1", "1", "1", "1 1 1 1 1"]


@pytest.mark.parametrize("name", ["box_ellipse", "triangle", "fractional_ball"])
def test_round_trip_exact(tmp_path, name):
    prog = build_dual(BUILDERS[name](), 2)
    back = import_sdpa(export_sdpa(prog, tmp_path / "x.dat-s"))
    assert back.equals(prog)
    assert [b.name for b in back.blocks] == [b.name for b in prog.blocks]


def _read_sdpa(path):
    """Minimal independent reader: returns c, blocks sizes, entries."""
    rows = [r for r in path.read_text().splitlines() if r and r[0] not in "*\""]
    n, nb = int(rows[0]), int(rows[1])
    sizes = [int(s) for s in rows[2].split()]
    assert len(sizes) == nb
    c = np.array([float(v) for v in rows[3].split()])
    F = {(m, b): np.zeros((abs(s), abs(s))) for b, s in enumerate(sizes, 1) for m in range(n + 1)}
    for r in rows[4:]:
        m, b, i, j, v = r.split()
        M = F[int(m), int(b)]
        M[int(i) - 1, int(j) - 1] = M[int(j) - 1, int(i) - 1] = float(v)
    return c, sizes, F


@pytest.mark.parametrize("name,k", [("box_ellipse", 1), ("box_ellipse", 3), ("sphere_disk", 2), ("triangle", 2)])
def test_independent_solver_agrees(tmp_path, name, k):
    cp = pytest.importorskip("cvxpy")
    prob = BUILDERS[name]()
    path = export_sdpa(build_dual(prob, k), tmp_path / "x.dat-s")
    c, sizes, F = _read_sdpa(path)
    x = cp.Variable(len(c))
    cons = []
    for b, s in enumerate(sizes, 1):
        expr = sum(F[m + 1, b] * x[m] for m in range(len(c)) if F[m + 1, b].any()) - F[0, b]
        if s > 0:
            cons.append(0.5 * (expr + expr.T) >> 0)
        else:
            cons.append(cp.diag(expr) >= 0)
    value = cp.Problem(cp.Minimize(c @ x), cons).solve(solver="CLARABEL")
    ours = solve_relaxation(prob, k)
    assert ours.status == Status.OPTIMAL
    assert value == pytest.approx(ours.lower_bound, abs=1e-6)


@pytest.mark.parametrize("s", [1e-2, 7.0, 1e3])
def test_row_scaling_invariance(s):
    prob = BUILDERS["box_ellipse"]()
    prog = build_dual(prob, 2)
    scaled = ConicProgram(prog.c, prog.blocks, s * prog.A, s * prog.b, prog.G, prog.h)
    a, b = solve(prog), solve(scaled)
    assert a.status == b.status == Status.OPTIMAL
    np.testing.assert_allclose(a.z[:3], b.z[:3], atol=1e-6)
    assert a.objective_value == pytest.approx(b.objective_value, abs=1e-8)
