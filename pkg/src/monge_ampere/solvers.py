"""Nonlinear solvers for the discrete Monge-Ampere equation.

``newton_solve`` is the main entry point: a damped Newton iteration started
from the solution of a Poisson problem (optionally convexified, optionally
computed on a coarser grid).  ``explicit_solve`` and ``semi_implicit_solve_2d``
are the slower fixed-point iterations kept for comparison.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as splalg

from .grid import GridFunction, create_grid, interpolate_to_fine
from .ma_operator import DEFAULT_DELTA, WideStencilScheme, default_epsilon
from .stencil import axis_stencil, build_stencil

log = logging.getLogger(__name__)

METHODS = ("newton", "explicit", "semi-implicit")
SCHEMES = ("monotone", "regularized")
INITS = ("poisson", "poisson+convexify", "given")
DEFAULT_MAX_ITER = {"newton": 100, "explicit": 500_000, "semi-implicit": 5000}
# Jacobian floor used by Newton unless configured.  Only the linear systems
# depend on it, not the fixed points; a floor this size keeps them well
# conditioned where the iterate is nearly flat along some direction.
NEWTON_EPSILON = 0.1


class SingularJacobianError(np.linalg.LinAlgError):
    """The linear system is singular: the discrete operator lost ellipticity."""


@dataclass
class SolverConfig:
    method: str = "newton"
    scheme: str = "monotone"
    tol: float = 1e-8
    max_iter: int = None  # None: DEFAULT_MAX_ITER[method]
    delta: float = DEFAULT_DELTA
    epsilon: float = None  # None: NEWTON_EPSILON (newton), 1e-8 / (2 h^2) (explicit)
    alpha0: float = 1.0
    backtrack: float = 0.5
    min_alpha: float = 2.0**-20
    init: str = None  # None: poisson, plus convexify if the problem asks for it
    coarse_init_factor: int = 1
    initial: GridFunction = field(default=None, repr=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.init is not None and self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.min_alpha <= 1:
            raise ValueError("min_alpha must lie in (0, 1]")
        if self.coarse_init_factor < 1:
            raise ValueError("coarse_init_factor must be >= 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.init == "given" and self.initial is None:
            raise ValueError("init='given' needs an initial grid function")

    @property
    def iteration_limit(self):
        return self.max_iter or DEFAULT_MAX_ITER[self.method]


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    damping_history: list = field(default_factory=list)
    wall_time: float = 0.0
    converged: bool = False
    message: str = ""
    # explicit method only: accepted time steps
    dt_history: list = field(default_factory=list)


def solve_linear(A, b):
    """Solve ``A x = b`` by sparse LU.

    Raises
    ------
    SingularJacobianError
        If the factorization breaks down or the solution misses the accuracy
        bound ``|Ax - b| <= 1e-10 (|A| |x| + |b|)`` (max norms).
    """
    A = sparse.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    try:
        lu = splalg.splu(A)
    except RuntimeError as exc:
        raise SingularJacobianError(str(exc)) from exc
    x = lu.solve(b)
    bound = 1e-10 * (splalg.norm(A, np.inf) * np.abs(x).max() + np.abs(b).max())
    res = A @ x - b
    if not np.all(np.isfinite(x)):
        raise SingularJacobianError("non-finite solution")
    if np.abs(res).max() > bound:
        x = x - lu.solve(res)
        res = A @ x - b
        if np.abs(res).max() > bound:
            raise SingularJacobianError(
                f"linear solve residual {np.abs(res).max():.3e} exceeds {bound:.3e}")
    return x


def boundary_field(grid, g):
    """Grid function equal to ``g`` on the boundary and zero inside."""
    vals = np.zeros(grid.size)
    vals[grid.boundary] = g(grid.coords[grid.boundary])
    return GridFunction(grid, vals)


def laplacian(grid, g):
    """Standard (2d+1)-point Laplacian on the interior and its boundary term.

    Returns ``(A, b)`` such that the discrete Laplacian of ``u`` with
    Dirichlet data ``g`` is ``A @ u_interior + b``.
    """
    scheme = WideStencilScheme(grid, axis_stencil(grid.dim), g)
    A = scheme.assemble(np.ones((grid.dim, scheme.n_interior)))
    b = scheme.directional_differences(boundary_field(grid, g)).sum(axis=0)
    return A, b


def solve_poisson(grid, rhs, g):
    """Solve ``Laplacian u = rhs`` (interior values) with ``u = g`` on the boundary."""
    A, b = laplacian(grid, g)
    u = boundary_field(grid, g)
    return u.with_interior(solve_linear(A, rhs - b))


def _coarse_grid(grid, factor, odd):
    if factor <= 1:
        return grid
    n = max(3, (grid.n - 1) // factor + 1)
    if odd and n % 2 == 0:
        n += 1
    return create_grid(grid.dim, min(n, grid.n))


def poisson_init(problem, grid, coarse_init_factor=1, convexify=False,
                 stencil=None):
    """Solve ``Laplacian u = (d! f)^(1/d)`` with the problem's boundary data.

    With ``coarse_init_factor > 1`` the solve (and the optional
    convexification on ``stencil``) happens on a grid about that many times
    coarser, and the result is interpolated onto ``grid``.
    """
    problem.check_grid(grid)
    coarse = _coarse_grid(grid, coarse_init_factor, problem.needs_mollified_f)
    f = problem.f_on(coarse).interior_values
    if np.any(f < 0):
        raise ValueError("negative data f")
    rhs = (math.factorial(grid.dim) * f) ** (1.0 / grid.dim)
    u = solve_poisson(coarse, rhs, problem.g)
    if convexify:
        if stencil is None:
            raise ValueError("convexification needs a stencil")
        u = convex_envelope(u, stencil, problem.g)
    if coarse != grid:
        u = interpolate_to_fine(u, grid)
        vals = u.flat.copy()
        vals[grid.boundary] = problem.g(grid.coords[grid.boundary])
        u = GridFunction(grid, vals)
    return u


def convex_envelope(u, stencil, g=None, tol=1e-10, max_iter=1_000_000):
    """Largest function below ``u`` that is convex along every stencil direction.

    Boundary values are kept.  Iterates ``u_i <- min(u_input_i, min_nu avg_nu)``
    where ``avg_nu`` is the value at node ``i`` of the line through the two arm
    endpoints (the plain mean for equal arms), until the increment is at most
    ``tol * h^2``.
    """
    grid = u.grid
    scheme = WideStencilScheme(grid, stencil, g)
    tp, tm = scheme.t_plus, scheme.t_minus
    a_plus, a_minus = tm / (tp + tm), tp / (tp + tm)
    obstacle = u.interior_values
    vals = u.flat.copy()
    stop = tol * grid.h**2
    for _ in range(max_iter):
        ext = scheme.extended(vals)
        avg = (a_plus * ext[scheme.plus] + a_minus * ext[scheme.minus]).min(axis=0)
        new = np.minimum(obstacle, avg)
        incr = np.abs(new - vals[scheme.center]).max()
        vals[scheme.center] = new
        if incr <= stop:
            break
    else:
        log.warning("convex envelope did not converge in %d sweeps", max_iter)
    return GridFunction(grid, vals)


def initial_guess(problem, grid, stencil, config):
    init = config.init
    if init is None:
        init = "poisson+convexify" if problem.needs_convexify else "poisson"
    if init == "given":
        u = config.initial
        if u.grid != grid:
            u = interpolate_to_fine(u, grid)
        return u
    return poisson_init(problem, grid, config.coarse_init_factor,
                        convexify=init == "poisson+convexify", stencil=stencil)


def _setup(problem, grid, stencil):
    problem.check_grid(grid)
    scheme = WideStencilScheme(grid, stencil, problem.g)
    f = problem.f_on(grid).interior_values
    return scheme, f


def _accept(trial_res, trial_norm, res, rnorm):
    """Max-norm residual decreases, or stays put while the 2-norm decreases.

    The second case lets Newton move while one node stays pinned at the max
    (e.g. a non-convex node where the operator is zero).
    """
    if trial_norm < rnorm:
        return True
    return trial_norm == rnorm and np.dot(trial_res, trial_res) < np.dot(res, res)


def newton_solve(problem, grid, stencil, config=None):
    """Damped Newton iteration on the monotone or regularized scheme.

    Each step solves ``J v = F[u] - f`` and sets ``u <- u - alpha v`` with
    ``alpha`` halved from ``config.alpha0`` until the max-norm residual
    decreases.

    Returns
    -------
    u : GridFunction
    report : SolveReport

    Raises
    ------
    SingularJacobianError
        If a Newton system cannot be solved.
    """
    config = config or SolverConfig()
    start = time.perf_counter()
    scheme, f = _setup(problem, grid, stencil)
    u = initial_guess(problem, grid, stencil, config)
    eps = config.epsilon if config.epsilon is not None else NEWTON_EPSILON

    def residual(vals):
        return scheme.residual(vals, f, config.scheme, config.delta)

    vals = u.flat.copy()
    inner = grid.interior
    res = residual(vals)
    rnorm = np.abs(res).max()
    report = SolveReport(residual_history=[float(rnorm)])
    while rnorm > config.tol and report.iterations < config.iteration_limit:
        J = scheme.jacobian(vals, config.scheme, config.delta, eps)
        step = solve_linear(J, res)
        alpha = config.alpha0
        while True:
            trial = vals.copy()
            trial[inner] -= alpha * step
            trial_res = residual(trial)
            trial_norm = np.abs(trial_res).max()
            if _accept(trial_res, trial_norm, res, rnorm):
                break
            alpha *= config.backtrack
            if alpha < config.min_alpha:
                break
        if alpha < config.min_alpha:
            report.message = "step size underflow"
            break
        vals, res, rnorm = trial, trial_res, trial_norm
        report.iterations += 1
        report.residual_history.append(float(rnorm))
        report.damping_history.append(alpha)
        log.debug("newton %d: residual %.3e alpha %g", report.iterations, rnorm, alpha)
    report.converged = bool(rnorm <= config.tol)
    if not report.converged and not report.message:
        report.message = "iteration limit reached"
    report.wall_time = time.perf_counter() - start
    return GridFunction(grid, vals), report


def cfl_step(scheme, vals, epsilon):
    """Largest stable forward Euler step: 1 / max row sum of |Jacobian|."""
    coeffs = scheme.monotone_coefficients(vals, epsilon)
    rowsum = (coeffs * (np.abs(scheme.w_plus) + np.abs(scheme.w_center)
                        + np.abs(scheme.w_minus))).sum(axis=0)
    return 1.0 / rowsum.max()


def explicit_solve(problem, grid, stencil, config=None):
    """Forward Euler iteration ``u <- u + dt (F[u] - f)`` on the monotone scheme.

    ``dt`` is recomputed every step from the Jacobian row sums; a step that
    would increase the max-norm residual is retried with half the step.
    """
    config = config or SolverConfig(method="explicit")
    start = time.perf_counter()
    scheme, f = _setup(problem, grid, stencil)
    u = initial_guess(problem, grid, stencil, config)
    eps = config.epsilon if config.epsilon is not None else default_epsilon(grid.h)
    vals = u.flat.copy()
    inner = grid.interior
    res = scheme.residual(vals, f)
    rnorm = np.abs(res).max()
    report = SolveReport(residual_history=[float(rnorm)])
    while rnorm > config.tol and report.iterations < config.iteration_limit:
        dt = cfl_step(scheme, vals, eps)
        while True:
            trial = vals.copy()
            trial[inner] += dt * res
            trial_res = scheme.residual(trial, f)
            trial_norm = np.abs(trial_res).max()
            if trial_norm <= rnorm or dt < 1e-300:
                break
            dt *= 0.5
        vals, res, rnorm = trial, trial_res, trial_norm
        report.iterations += 1
        report.residual_history.append(float(rnorm))
        report.dt_history.append(float(dt))
    report.converged = bool(rnorm <= config.tol)
    if not report.converged:
        report.message = "iteration limit reached"
    report.wall_time = time.perf_counter() - start
    return GridFunction(grid, vals), report


def hessian_2d(U, h):
    """Centered ``u_xx, u_yy, u_xy`` at interior nodes of a 2D array."""
    c = U[1:-1, 1:-1]
    uxx = (U[2:, 1:-1] - 2 * c + U[:-2, 1:-1]) / h**2
    uyy = (U[1:-1, 2:] - 2 * c + U[1:-1, :-2]) / h**2
    uxy = (U[2:, 2:] - U[2:, :-2] - U[:-2, 2:] + U[:-2, :-2]) / (4 * h**2)
    return uxx, uyy, uxy


def semi_implicit_solve_2d(problem, grid, config=None):
    """Iterate ``Laplacian u_new = sqrt(2 f + |D^2 u|^2)`` (2D only).

    The residual recorded is that of the standard centered discretization
    ``u_xx u_yy - u_xy^2 - f``, whose solutions are the fixed points.
    Stops when either the increment or that residual is at most ``tol``.
    """
    if grid.dim != 2:
        raise ValueError("the semi-implicit iteration is two-dimensional only")
    config = config or SolverConfig(method="semi-implicit")
    start = time.perf_counter()
    problem.check_grid(grid)
    f = problem.f_on(grid).values[1:-1, 1:-1]
    # convexification, when requested, uses the nearest-neighbour stencil
    u = initial_guess(problem, grid, build_stencil(2, 1), config)
    A, b = laplacian(grid, problem.g)
    lu = splalg.splu(sparse.csc_matrix(A))
    vals = u.flat.copy()
    inner = grid.interior
    h = grid.h
    report = SolveReport()

    def fd_residual(U):
        uxx, uyy, uxy = hessian_2d(U, h)
        return uxx, uyy, uxy, np.abs(uxx * uyy - uxy**2 - f).max()

    uxx, uyy, uxy, rnorm = fd_residual(vals.reshape(grid.shape))
    report.residual_history.append(float(rnorm))
    while rnorm > config.tol and report.iterations < config.iteration_limit:
        rhs = np.sqrt(2 * f + uxx**2 + uyy**2 + 2 * uxy**2).reshape(-1)
        new = lu.solve(rhs - b)
        incr = np.abs(new - vals[inner]).max()
        vals[inner] = new
        report.iterations += 1
        uxx, uyy, uxy, rnorm = fd_residual(vals.reshape(grid.shape))
        report.residual_history.append(float(rnorm))
        if incr <= config.tol:
            break
    report.converged = bool(rnorm <= config.tol or incr <= config.tol) \
        if report.iterations else bool(rnorm <= config.tol)
    if not report.converged:
        report.message = "iteration limit reached"
    report.wall_time = time.perf_counter() - start
    return GridFunction(grid, vals), report


def solve(problem, grid, stencil, config=None):
    """Dispatch on ``config.method``."""
    config = config or SolverConfig()
    if config.method == "newton":
        return newton_solve(problem, grid, stencil, config)
    if config.method == "explicit":
        return explicit_solve(problem, grid, stencil, config)
    return semi_implicit_solve_2d(problem, grid, config)
