"""Reference problems with known optimal values.

Each builder returns an ``FsippProblem``; the same problems ship as JSON
files under ``fsipp/data`` (regenerate with ``python -m fsipp.fixtures``).
"""

from __future__ import annotations

from importlib import resources
from math import sqrt
from pathlib import Path

import numpy as np

from .moments import IndexSet
from .poly import BiPolynomial, Polynomial
from .relax import FsippProblem


def _xy(m: int, n: int):
    v = Polynomial.variables(m + n)
    return v[:m], v[m:]


def _x_only(h: Polynomial, m: int) -> Polynomial:
    return Polynomial({e[:m]: c for e, c in h.items()}, m)


def box_ellipse() -> FsippProblem:
    """Box-indexed constraint whose feasible set is a filled ellipse; optimum 0.5 at (-0.5, -0.5)."""
    (x1, x2), (y1, y2) = _xy(2, 2)
    f = (x1 + 1) ** 2 + (x2 + 1) ** 2
    p = x1 ** 2 + y1 ** 2 * x2 ** 2 + 2 * y1 * y2 * x1 * x2 + x1 + x2
    return FsippProblem(_x_only(f, 2), BiPolynomial.from_joint(p, 2, 2), IndexSet.box(2), name="box_ellipse")


def ball_ellipse() -> FsippProblem:
    """Ball-indexed variant; optimum 0.5."""
    (x1, x2), (y1, y2) = _xy(2, 2)
    f = (x1 + 1) ** 2 + (x2 + 1) ** 2
    p = x1 ** 2 + 2 * y1 * x1 * x2 + (1 - y2 ** 2) * x2 ** 2 + x1 + x2
    return FsippProblem(_x_only(f, 2), BiPolynomial.from_joint(p, 2, 2), IndexSet.ball(2), name="ball_ellipse")


def sphere_disk() -> FsippProblem:
    """Sphere-indexed constraint; optimum 2 (sqrt(2)/2 - 1)^2 = 3 - 2 sqrt(2)."""
    (x1, x2), (y1, y2) = _xy(2, 2)
    f = (x1 - 1) ** 2 + (x2 - 1) ** 2
    p = (y1 * x1 - y2 * x2) ** 2 / 4 + (y2 * x1 + y1 * x2) ** 2 - 1
    return FsippProblem(_x_only(f, 2), BiPolynomial.from_joint(p, 2, 2), IndexSet.sphere(2), name="sphere_disk")


TRIANGLE = ((-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0))


def triangle_indexed() -> FsippProblem:
    """Triangle-indexed constraint.

    ``(y1 - y2)^2`` ranges over [0, 4] on the triangle, so where ``x1 x2 < 0``
    the constraint reads ``|x1 - x2| <= 1/sqrt(2)``; projecting (-1, 1) onto
    that strip gives the optimum ``9/4 - sqrt(2)`` at ``(-sqrt(2)/4, sqrt(2)/4)``.
    """
    (x1, x2), (y1, y2) = _xy(2, 2)
    f = (x1 + 1) ** 2 + (x2 - 1) ** 2
    p = -1 + 2 * x1 ** 2 + 2 * x2 ** 2 - (y1 - y2) ** 2 * x1 * x2
    Y = IndexSet.from_simplices([TRIANGLE])
    return FsippProblem(_x_only(f, 2), BiPolynomial.from_joint(p, 2, 2), Y, name="triangle")


def fractional_ball(n: int = 6, seed: int = 0) -> FsippProblem:
    """Quartic-over-linear objective on the unit ball cut by a halfspace.

    ``a_i`` are drawn uniformly from [-1, 1] with the given seed; the optimum
    ``n (sqrt(1/n) - 1)^4 / (1 + sqrt(n))`` does not depend on them.
    """
    a = np.random.default_rng(seed).uniform(-1.0, 1.0, n)
    x, y = _xy(n, n)
    zero = Polynomial.zero(2 * n)
    f = sum(((xi - 1) ** 4 for xi in x), zero)
    g = sum(x, zero) + 1
    p = sum(((1 - (yi - ai) ** 2 / 4) * xi ** 2 for xi, yi, ai in zip(x, y, a)), zero) - 1
    phi = -sum(x, zero)
    return FsippProblem(
        _x_only(f, n), BiPolynomial.from_joint(p, n, n), IndexSet.box(n),
        g=_x_only(g, n), phi=[_x_only(phi, n)], name="fractional_ball" if (n, seed) == (6, 0) else f"fractional_ball_n{n}_seed{seed}",
    )


def fractional_ball_optimum(n: int) -> float:
    return n * (sqrt(1 / n) - 1) ** 4 / (1 + sqrt(n))


BUILDERS = {
    "box_ellipse": box_ellipse,
    "ball_ellipse": ball_ellipse,
    "sphere_disk": sphere_disk,
    "triangle": triangle_indexed,
    "fractional_ball": fractional_ball,
}

KNOWN_OPTIMA = {
    "box_ellipse": 0.5,
    "ball_ellipse": 0.5,
    "sphere_disk": 3 - 2 * sqrt(2),
    "triangle": 9 / 4 - sqrt(2),
    "fractional_ball": fractional_ball_optimum(6),
}


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("fsipp") / "data" / f"{name}.json"))


def write_all(directory=None) -> list:
    from .fileio import save_problem

    directory = Path(directory) if directory else fixture_path("x").parent
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, build in BUILDERS.items():
        path = directory / f"{name}.json"
        save_problem(build(), path)
        out.append(path)
    return out


if __name__ == "__main__":
    for path in write_all():
        print(path)
