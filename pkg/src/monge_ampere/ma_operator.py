"""Wide-stencil discretizations of the Monge-Ampere operator.

The discrete operator at an interior node is the minimum, over orthogonal
bases of grid directions, of the product of the positive parts of the second
directional differences along the basis directions.  A smooth variant replaces
every max/min by a ``delta``-regularized version so Newton's method can be
applied; its Jacobian is computed exactly by the chain rule.

Reference quantities on symmetric matrices (``det_plus``, ``variational_det``,
``linearization_reference``) are included as test oracles.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sparse

from .grid import GridFunction, multilinear_weights

DEFAULT_DELTA = 1e-2


def default_epsilon(h):
    """Jacobian floor for second differences: ``1e-8 / (2 h^2)``."""
    return 1e-8 / (2 * h * h)


@dataclass(frozen=True)
class SchemeParams:
    delta: float = DEFAULT_DELTA
    epsilon: float = None  # None: default_epsilon(h)

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    def epsilon_for(self, grid):
        return default_epsilon(grid.h) if self.epsilon is None else self.epsilon


def _smoothing_gap(d, delta):
    """``(sqrt(d^2 + delta^2) - |d|) / 2`` without cancellation."""
    d = np.abs(d)
    root = np.sqrt(d * d + delta * delta)
    with np.errstate(invalid="ignore"):
        gap = 0.5 * delta * delta / (root + d)
    return np.where(root + d > 0, gap, 0.0)


def smooth_max(a, b, delta):
    """``(a + b + sqrt((a - b)^2 + delta^2)) / 2``, evaluated stably."""
    return np.maximum(a, b) + _smoothing_gap(a - b, delta)


def smooth_min(a, b, delta):
    """``(a + b - sqrt((a - b)^2 + delta^2)) / 2``, evaluated stably."""
    return np.minimum(a, b) - _smoothing_gap(a - b, delta)


def _safe_ratio(a, b):
    """``a / b`` with 0 where ``b`` vanishes (only possible when delta = 0)."""
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


def _arm_geometry(grid, idx, step):
    """Where the arm ``idx + t*step``, ``0 < t <= 1``, leaves the closed domain.

    Returns ``(full, frac, point)``: whether the full arm ends on a grid node,
    the fraction of the arm inside the domain, and the endpoint in index units.
    """
    n = grid.n
    step = np.asarray(step, dtype=np.int64)
    target = idx + step
    full = np.all((target >= 0) & (target <= n - 1), axis=1)
    room = np.full(idx.shape[0], np.inf)
    for k, s in enumerate(step):
        if s > 0:
            room = np.minimum(room, (n - 1 - idx[:, k]) / s)
        elif s < 0:
            room = np.minimum(room, idx[:, k] / (-s))
    frac = np.where(full, 1.0, np.minimum(room, 1.0))
    point = idx + frac[:, None] * step
    snapped = np.round(point)
    point = np.where(np.abs(point - snapped) < 1e-9, snapped, point)
    return full, frac, point


def _three_point_weights(tp, tm):
    """Weights (plus, center, minus) of the unequal-arm second difference."""
    s = tp + tm
    return 2.0 / (tp * s), -2.0 / (tp * tm), 2.0 / (tm * s)


@dataclass(frozen=True)
class DirectionalDiffRecord:
    node: tuple
    direction: tuple
    value: float
    t_plus: float
    t_minus: float
    # (kind, index-or-point, weight); kind is "node" or "boundary"
    dependencies: tuple


class WideStencilScheme:
    """Second directional differences and Monge-Ampere operators on one grid.

    Parameters
    ----------
    grid : UniformGrid
    stencil : StencilBasisSet
    boundary : callable, optional
        Dirichlet data ``g`` evaluated at arbitrary boundary points, used
        where a stencil arm is cut short by the boundary.  When omitted, the
        value there is interpolated from the boundary nodes of ``u``.

    Arrays indexed ``[k, i]`` refer to direction ``k`` and interior unknown
    ``i``.  Grid functions may be passed as :class:`GridFunction` or as arrays
    holding all ``M`` node values.
    """

    def __init__(self, grid, stencil, boundary=None):
        if stencil.dim != grid.dim:
            raise ValueError("stencil and grid dimensions differ")
        self.grid = grid
        self.stencil = stencil
        self.boundary = boundary
        M = grid.size
        idx = grid.multi_index[grid.interior]
        h = grid.h
        n_dir = len(stencil.directions)
        n_int = idx.shape[0]

        self.plus = np.empty((n_dir, n_int), dtype=np.int64)
        self.minus = np.empty((n_dir, n_int), dtype=np.int64)
        self.t_plus = np.empty((n_dir, n_int))
        self.t_minus = np.empty((n_dir, n_int))
        both_full = np.ones((n_dir, n_int), dtype=bool)
        extra = []
        n_extra = 0
        for k, nu in enumerate(stencil.directions):
            nu = np.asarray(nu)
            length = np.linalg.norm(nu) * h
            for sign, ext_out, t_out in ((1, self.plus, self.t_plus),
                                         (-1, self.minus, self.t_minus)):
                full, frac, point = _arm_geometry(grid, idx, sign * nu)
                both_full[k] &= full
                node = np.zeros(n_int, dtype=np.int64)
                node[full] = np.ravel_multi_index(
                    tuple((idx[full] + sign * nu).T), grid.shape)
                short = np.flatnonzero(~full)
                node[short] = M + n_extra + np.arange(short.size)
                n_extra += short.size
                extra.append(point[short] * h)
                ext_out[k] = node
                t_out[k] = frac * length
        self.extra_points = (np.concatenate(extra) if extra
                             else np.empty((0, grid.dim)))
        self.w_plus, self.w_center, self.w_minus = _three_point_weights(
            self.t_plus, self.t_minus)
        # centered weights 1/(|nu|^2 h^2) computed from the integer |nu|^2
        sq = np.array([np.dot(nu, nu) for nu in stencil.directions], dtype=float)
        centered = np.broadcast_to((1.0 / (sq * h * h))[:, None], both_full.shape)
        self.w_plus = np.where(both_full, centered, self.w_plus)
        self.w_minus = np.where(both_full, centered, self.w_minus)
        self.w_center = np.where(both_full, -2 * centered, self.w_center)
        self.center = grid.interior
        self.bases = np.asarray(stencil.bases, dtype=np.int64)

        if boundary is not None:
            vals = np.asarray(boundary(self.extra_points), dtype=float)
            self._extra_values = np.broadcast_to(vals, (n_extra,)).copy()
            self._extra_matrix = None
        else:
            self._extra_values = None
            self._extra_matrix = multilinear_weights(grid, self.extra_points)

    @property
    def n_interior(self):
        return self.center.size

    def _flat(self, u):
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} node values, got {u.size}")
        return u

    def _interior_data(self, f):
        f = np.asarray(f, dtype=float).reshape(-1)
        if f.size == self.grid.size:
            return f[self.center]
        if f.size == self.n_interior:
            return f
        raise ValueError("data must hold all node values or interior values")

    def extended(self, u):
        """Node values followed by the values at boundary cut points."""
        u = self._flat(u)
        if self._extra_matrix is None:
            tail = self._extra_values
        else:
            tail = self._extra_matrix @ u
        return np.concatenate([u, tail])

    def directional_differences(self, u):
        """Second differences, shape ``(n_directions, n_interior)``."""
        ext = self.extended(u)
        return (self.w_plus * ext[self.plus]
                + self.w_center * ext[self.center]
                + self.w_minus * ext[self.minus])

    def monotone(self, u):
        """Operator values and the index of the minimizing basis per node."""
        dpos = np.maximum(self.directional_differences(u), 0.0)
        prods = np.prod(dpos[self.bases], axis=1)
        arg = np.argmin(prods, axis=0)
        return prods[arg, np.arange(prods.shape[1])], arg

    def regularized(self, u, delta):
        return self._regularized(self.directional_differences(u), delta)[0]

    def _regularized(self, D, delta):
        if delta < 0:
            raise ValueError("delta must be >= 0")
        clamped = smooth_max(D, 0.0, delta)
        prods = np.prod(clamped[self.bases], axis=1)
        value = prods[0]
        # d(value)/d(prods[b]), accumulated through the left fold
        weights = np.zeros_like(prods)
        weights[0] = 1.0
        for b in range(1, prods.shape[0]):
            diff = value - prods[b]
            root = np.sqrt(diff**2 + delta**2)
            ratio = _safe_ratio(diff, root)
            weights[:b] *= 0.5 * (1 - ratio)
            weights[b] = 0.5 * (1 + ratio)
            value = smooth_min(value, prods[b], delta)
        return value, clamped, weights

    def residual(self, u, f, scheme="monotone", delta=DEFAULT_DELTA):
        f_int = self._interior_data(f)
        if scheme == "monotone":
            return self.monotone(u)[0] - f_int
        if scheme == "regularized":
            return self.regularized(u, delta) - f_int
        raise ValueError(f"unknown scheme {scheme!r}")

    # -- Jacobians ---------------------------------------------------------

    @cached_property
    def _pattern(self):
        """COO triplets (direction, row, column, weight) over interior columns."""
        inum = self.grid.interior_number
        M = self.grid.size
        n_dir, n_int = self.plus.shape
        rows = np.broadcast_to(np.arange(n_int), (n_dir, n_int))
        dirs = np.broadcast_to(np.arange(n_dir)[:, None], (n_dir, n_int))
        parts = [(dirs.ravel(), rows.ravel(), rows.ravel(), self.w_center.ravel())]
        for ext, w in ((self.plus, self.w_plus), (self.minus, self.w_minus)):
            node = np.where(ext < M, ext, 0)
            col = np.where(ext < M, inum[node], -1)
            keep = col >= 0
            parts.append((dirs[keep], rows[keep], col[keep], w[keep]))
        return tuple(np.concatenate(p) for p in zip(*parts))

    def assemble(self, coeffs):
        """Sparse ``sum_k diag(coeffs[k]) D_k`` on the interior unknowns."""
        dirs, rows, cols, w = self._pattern
        n = self.n_interior
        mat = sparse.coo_matrix((coeffs[dirs, rows] * w, (rows, cols)),
                                shape=(n, n))
        return mat.tocsr()

    def monotone_coefficients(self, u, epsilon):
        D = self.directional_differences(u)
        _, arg = self.monotone(u)
        floored = np.maximum(D, epsilon)
        active = self.bases[arg]
        cols = np.arange(D.shape[1])
        coeffs = np.zeros_like(D)
        d = active.shape[1]
        for j in range(d):
            cof = np.ones(D.shape[1])
            for k in range(d):
                if k != j:
                    cof *= floored[active[:, k], cols]
            coeffs[active[:, j], cols] += cof
        return coeffs

    def jacobian_monotone(self, u, epsilon=None):
        """Danskin Jacobian of the monotone operator with a floor on cofactors."""
        if epsilon is None:
            epsilon = default_epsilon(self.grid.h)
        return self.assemble(self.monotone_coefficients(u, epsilon))

    def regularized_coefficients(self, u, delta):
        D = self.directional_differences(u)
        _, clamped, weights = self._regularized(D, delta)
        slope = 0.5 * (1 + _safe_ratio(D, np.sqrt(D**2 + delta**2)))
        coeffs = np.zeros_like(D)
        d = self.bases.shape[1]
        for b, basis in enumerate(self.bases):
            for j in range(d):
                term = weights[b] * slope[basis[j]]
                for k in range(d):
                    if k != j:
                        term = term * clamped[basis[k]]
                coeffs[basis[j]] += term
        return coeffs

    def jacobian_regularized(self, u, delta):
        """Exact Jacobian of the regularized operator."""
        return self.assemble(self.regularized_coefficients(u, delta))

    def jacobian(self, u, scheme="monotone", delta=DEFAULT_DELTA, epsilon=None):
        if scheme == "monotone":
            return self.jacobian_monotone(u, epsilon)
        if scheme == "regularized":
            return self.jacobian_regularized(u, delta)
        raise ValueError(f"unknown scheme {scheme!r}")


def second_directional_difference(u, g, node, nu):
    """Second difference of ``u`` along grid direction ``nu`` at one interior node.

    Arms that would leave the domain are cut at the boundary, where ``g`` is
    evaluated (or ``u`` interpolated from its boundary nodes if ``g`` is None).
    """
    grid = u.grid
    idx = np.asarray(node, dtype=np.int64).reshape(1, -1)
    if np.any(idx <= 0) or np.any(idx >= grid.n - 1):
        raise ValueError(f"{tuple(node)} is not an interior node")
    nu = np.asarray(nu, dtype=np.int64)
    length = np.linalg.norm(nu) * grid.h
    vals, deps, ts = [], [], []
    for sign in (1, -1):
        full, frac, point = _arm_geometry(grid, idx, sign * nu)
        ts.append(frac[0] * length)
        if full[0]:
            flat = grid.flat_index(idx[0] + sign * nu)
            vals.append(u.flat[flat])
            deps.append(("node", flat))
        else:
            x = point * grid.h
            if g is None:
                val = (multilinear_weights(grid, x) @ u.flat)[0]
            else:
                val = float(np.asarray(g(x)).reshape(-1)[0])
            vals.append(val)
            deps.append(("boundary", tuple(x[0])))
    tp, tm = ts
    if all(d[0] == "node" for d in deps):
        wp = wm = 1.0 / (float(nu @ nu) * grid.h**2)
        wc = -2 * wp
    else:
        wp, wc, wm = _three_point_weights(tp, tm)
    center = grid.flat_index(idx[0])
    value = wp * vals[0] + wc * u.flat[center] + wm * vals[1]
    return DirectionalDiffRecord(
        node=tuple(int(i) for i in idx[0]),
        direction=tuple(int(c) for c in nu),
        value=float(value),
        t_plus=float(tp),
        t_minus=float(tm),
        dependencies=((*deps[0], wp), ("node", center, wc), (*deps[1], wm)),
    )


def _as_residual(grid, interior):
    out = np.zeros(grid.size)
    out[grid.interior] = interior
    return GridFunction(grid, out)


def ma_monotone(u, f, g, stencil, params=None):
    """Residual of the monotone scheme as a grid function (zero on the boundary)."""
    scheme = WideStencilScheme(u.grid, stencil, g)
    return _as_residual(u.grid, scheme.residual(u, f, "monotone"))


def ma_regularized(u, f, g, stencil, params=None):
    params = params or SchemeParams()
    scheme = WideStencilScheme(u.grid, stencil, g)
    return _as_residual(u.grid,
                        scheme.residual(u, f, "regularized", params.delta))


def jacobian_monotone(u, g, stencil, params=None):
    params = params or SchemeParams()
    scheme = WideStencilScheme(u.grid, stencil, g)
    return scheme.jacobian_monotone(u, params.epsilon_for(u.grid))


def jacobian_regularized(u, g, stencil, params=None):
    params = params or SchemeParams()
    scheme = WideStencilScheme(u.grid, stencil, g)
    return scheme.jacobian_regularized(u, params.delta)


# -- matrix oracles ----------------------------------------------------------

def _check_symmetric(H):
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(H, H.T, rtol=1e-12, atol=1e-12):
        raise ValueError("matrix is not symmetric")
    return H


def det_plus(H):
    """Product of the positive parts of the eigenvalues of symmetric ``H``."""
    lam = np.linalg.eigvalsh(_check_symmetric(H))
    return float(np.prod(np.maximum(lam, 0.0)))


def variational_det(H, bases):
    """Minimum over sampled orthonormal bases of ``prod_j nu_j^T H nu_j``.

    ``bases`` has shape ``(m, d, d)``; ``bases[b, j]`` is the j-th vector of
    basis ``b``.  Only meaningful for positive definite ``H``.
    """
    H = _check_symmetric(H)
    if np.any(np.linalg.eigvalsh(H) <= 0):
        raise ValueError("matrix is not positive definite")
    V = np.asarray(bases, dtype=float)
    quad = np.einsum("bji,ik,bjk->bj", V, H, V)
    return float(np.prod(quad, axis=1).min())


def angle_bases(count):
    """``count`` rotated copies of the standard basis of R^2, equally spaced in angle."""
    theta = np.linspace(0, np.pi / 2, count, endpoint=False)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.column_stack([c, s]), np.column_stack([-s, c])], axis=1)


def random_bases(dim, count, rng):
    """Haar-random orthonormal bases, shape ``(count, dim, dim)``."""
    q, r = np.linalg.qr(rng.standard_normal((count, dim, dim)))
    q = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    return np.swapaxes(q, 1, 2)


def adjugate(H):
    """Transpose of the cofactor matrix; valid for singular ``H``."""
    H = np.asarray(H, dtype=float)
    d = H.shape[0]
    cof = np.empty_like(H)
    for i in range(d):
        for j in range(d):
            minor = np.delete(np.delete(H, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * (np.linalg.det(minor) if d > 1 else 1.0)
    return cof.T


def linearization_reference(H, K):
    """Derivative of ``det`` at ``H`` in direction ``K``: ``trace(adj(H) K)``."""
    return float(np.trace(adjugate(_check_symmetric(H)) @ _check_symmetric(K)))
