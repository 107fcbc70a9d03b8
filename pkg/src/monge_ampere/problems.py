"""Exact solutions used for benchmarking, with their data ``f`` and ``g``.

All fields take an ``(m, dim)`` array of points and return ``m`` values.  The
center of the domain is ``x0 = (0.5, ..., 0.5)``.
"""

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, sample


def _r2(x):
    return np.sum(x * x, axis=1)


def _dist(x):
    return np.sqrt(np.sum((x - 0.5) ** 2, axis=1))


def _c2_u(x):
    return np.exp(_r2(x) / 2)


def _c2_f_2d(x):
    r2 = _r2(x)
    return (1 + r2) * np.exp(r2)


def _c2_f_3d(x):
    r2 = _r2(x)
    return (1 + r2) * np.exp(1.5 * r2)


def _c1_u(x):
    return 0.5 * np.maximum(_dist(x) - 0.2, 0.0) ** 2


def _c1_f_2d(x):
    r = _dist(x)
    with np.errstate(divide="ignore"):
        return np.where(r > 0.2, 1 - 0.2 / r, 0.0)


def _c1_f_3d(x):
    r = _dist(x)
    with np.errstate(divide="ignore"):
        return np.where(r > 0.2, (1 - 0.2 / r) ** 2, 0.0)


def _blowup_u(x):
    d = x.shape[1]
    return -np.sqrt(d - _r2(x))


def _blowup_f(x):
    d = x.shape[1]
    with np.errstate(divide="ignore"):
        return d * (d - _r2(x)) ** (-(d + 2) / 2)


def _cone_u(x):
    return _dist(x)


def _cone_f(x):
    raise NotImplementedError("cone data is a point mass; use f_on(grid)")


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    dim: int
    u_exact: object
    f: object
    needs_convexify: bool = False
    needs_mollified_f: bool = False

    def g(self, x):
        """Dirichlet data: the exact solution evaluated at boundary points."""
        return self.u_exact(np.atleast_2d(x))

    def f_on(self, grid):
        """Data sampled at interior nodes (boundary entries are zero)."""
        if grid.dim != self.dim:
            raise ValueError(f"{self.name} is {self.dim}D, grid is {grid.dim}D")
        if self.needs_mollified_f:
            return mollified_dirac_f(grid)
        return sample(grid, self.f, interior_only=True)

    def exact_on(self, grid):
        return sample(grid, self.u_exact)

    def check_grid(self, grid):
        if grid.dim != self.dim:
            raise ValueError(f"{self.name} is {self.dim}D, grid is {grid.dim}D")
        if self.needs_mollified_f and grid.n % 2 == 0:
            raise ValueError(
                f"{self.name} needs odd n so the center is a node, got {grid.n}")


PROBLEMS = {
    "c2_2d": ProblemSpec("c2_2d", 2, _c2_u, _c2_f_2d),
    "c1_2d": ProblemSpec("c1_2d", 2, _c1_u, _c1_f_2d),
    "blowup_2d": ProblemSpec("blowup_2d", 2, _blowup_u, _blowup_f),
    "cone_2d": ProblemSpec("cone_2d", 2, _cone_u, _cone_f,
                           needs_convexify=True, needs_mollified_f=True),
    "c2_3d": ProblemSpec("c2_3d", 3, _c2_u, _c2_f_3d),
    "c1_3d": ProblemSpec("c1_3d", 3, _c1_u, _c1_f_3d),
    "blowup_3d": ProblemSpec("blowup_3d", 3, _blowup_u, _blowup_f),
}


def lookup(name, dim=None):
    """Problem by full name (``c2_2d``) or short name plus dimension (``c2``, 2)."""
    key = name if name in PROBLEMS or dim is None else f"{name}_{dim}d"
    try:
        problem = PROBLEMS[key]
    except KeyError:
        raise ValueError(f"unknown example {name!r} "
                         f"(known: {', '.join(PROBLEMS)})") from None
    if dim is not None and problem.dim != dim:
        raise ValueError(f"{key} is {problem.dim}D, requested {dim}D")
    return problem


def mollified_dirac_f(grid):
    """Point mass at the center spread over the ball of radius h/2.

    Nodes within ``h/2`` of the center get ``4/h^2``.  On an odd grid this is
    the center node alone, so the discrete mass ``sum(f) h^2`` is 4.
    """
    if grid.dim != 2:
        raise ValueError("mollified point mass is defined for 2D grids")
    if grid.n % 2 == 0:
        raise ValueError(f"odd n required so the center is a node, got {grid.n}")
    h = grid.h
    near = _dist(grid.coords) <= h / 2 + 1e-12 * h
    vals = np.where(near & ~grid.boundary_mask, 4 / h**2, 0.0)
    return GridFunction(grid, vals)


def max_error(u_num, problem, grid=None):
    """Max-norm distance to the exact solution over all nodes."""
    grid = grid or u_num.grid
    exact = problem.exact_on(grid)
    return float(np.max(np.abs(np.asarray(u_num).reshape(-1) - exact.flat)))
