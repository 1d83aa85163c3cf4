"""Lower bounds and outer approximations for fractional semi-infinite
polynomial programs with s.o.s-convex data, via moment relaxations."""

from .moments import IndexSet, moment
from .poly import BiPolynomial, Polynomial
from .relax import (
    FsippProblem,
    HierarchyResult,
    Membership,
    MomentFunctional,
    boundary_trace,
    build_dual,
    discretize_baseline,
    membership,
    preflight_positivity,
    solve_hierarchy,
)
from .sdp import ConicProgram, ConicSolution, Status, export_sdpa, solve
from .soscert import certify_sos, certify_sos_convex, validate_problem

__version__ = "0.1.0"

__all__ = [
    "BiPolynomial",
    "ConicProgram",
    "ConicSolution",
    "FsippProblem",
    "HierarchyResult",
    "IndexSet",
    "Membership",
    "MomentFunctional",
    "Polynomial",
    "Status",
    "boundary_trace",
    "build_dual",
    "certify_sos",
    "certify_sos_convex",
    "discretize_baseline",
    "export_sdpa",
    "membership",
    "moment",
    "preflight_positivity",
    "solve",
    "solve_hierarchy",
    "validate_problem",
]
