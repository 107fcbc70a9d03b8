"""Monotone wide-stencil finite difference solvers for the Monge-Ampere equation.

Solves ``det(D^2 u) = f`` for convex ``u`` on the unit square or cube with
Dirichlet data, using a damped Newton iteration on a monotone discretization
built from second differences along orthogonal grid directions.
"""

from .grid import GridFunction, UniformGrid, create_grid, interpolate_to_fine, sample
from .ma_operator import (
    SchemeParams,
    WideStencilScheme,
    jacobian_monotone,
    jacobian_regularized,
    ma_monotone,
    ma_regularized,
    second_directional_difference,
)
from .problems import PROBLEMS, ProblemSpec, lookup, max_error, mollified_dirac_f
from .solvers import (
    SingularJacobianError,
    SolveReport,
    SolverConfig,
    convex_envelope,
    explicit_solve,
    newton_solve,
    poisson_init,
    semi_implicit_solve_2d,
    solve,
    solve_linear,
)
from .stencil import StencilBasisSet, build_stencil, generate_directions, named_stencil

__version__ = "0.1.0"

__all__ = [
    "GridFunction", "UniformGrid", "create_grid", "interpolate_to_fine", "sample",
    "SchemeParams", "WideStencilScheme", "jacobian_monotone", "jacobian_regularized",
    "ma_monotone", "ma_regularized", "second_directional_difference",
    "PROBLEMS", "ProblemSpec", "lookup", "max_error", "mollified_dirac_f",
    "SingularJacobianError", "SolveReport", "SolverConfig", "convex_envelope",
    "explicit_solve", "newton_solve", "poisson_init", "semi_implicit_solve_2d",
    "solve", "solve_linear",
    "StencilBasisSet", "build_stencil", "generate_directions", "named_stencil",
]
