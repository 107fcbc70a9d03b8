"""Uniform grids on the unit square/cube and scalar fields sampled on them.

Nodes are addressed by an integer multi-index ``(i_0, ..., i_{d-1})`` with
coordinate ``x_k = i_k * h``.  Flat node numbers follow C (row-major) order of
the multi-index, i.e. ``np.ravel_multi_index(idx, grid.shape)``; axis 0 is the
``x`` coordinate.  Interior unknowns are numbered in the same order with the
boundary nodes skipped.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sparse


@dataclass(frozen=True)
class UniformGrid:
    """Uniform grid with ``n`` nodes per side on ``[0, 1]^dim``."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 3:
            raise ValueError(f"need at least 3 nodes per side, got {self.n}")

    @property
    def h(self):
        return 1.0 / (self.n - 1)

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def size(self):
        return self.n**self.dim

    @cached_property
    def multi_index(self):
        """(M, dim) integer multi-indices of all nodes in flat order."""
        axes = np.indices(self.shape).reshape(self.dim, -1)
        return np.ascontiguousarray(axes.T)

    @cached_property
    def coords(self):
        """(M, dim) node coordinates in flat order."""
        return self.multi_index * self.h

    @cached_property
    def boundary_mask(self):
        idx = self.multi_index
        return np.any((idx == 0) | (idx == self.n - 1), axis=1)

    @cached_property
    def interior(self):
        """Flat node numbers of the interior nodes, increasing."""
        return np.flatnonzero(~self.boundary_mask)

    @cached_property
    def boundary(self):
        return np.flatnonzero(self.boundary_mask)

    @cached_property
    def interior_number(self):
        """Map flat node number -> interior unknown number (-1 on the boundary)."""
        out = np.full(self.size, -1, dtype=np.int64)
        out[self.interior] = np.arange(self.interior.size)
        return out

    @property
    def n_interior(self):
        return (self.n - 2) ** self.dim

    def flat_index(self, idx):
        return int(np.ravel_multi_index(tuple(idx), self.shape))

    def node_coords(self, idx):
        return np.asarray(idx, dtype=float) * self.h


def create_grid(dim, n):
    """Build the ``n^dim`` uniform grid on the unit square or cube."""
    return UniformGrid(int(dim), int(n))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """One real value per node of ``grid``; ``values`` has shape ``grid.shape``."""

    grid: UniformGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.size != self.grid.size:
            raise ValueError(
                f"expected {self.grid.size} values, got {vals.size}")
        vals = vals.reshape(self.grid.shape)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    @property
    def flat(self):
        return self.values.reshape(-1)

    @property
    def interior_values(self):
        return self.flat[self.grid.interior]

    def with_interior(self, interior_values):
        """Copy with the interior entries replaced, boundary entries kept."""
        out = self.flat.copy()
        out[self.grid.interior] = interior_values
        return GridFunction(self.grid, out)


def sample(grid, fn, interior_only=False):
    """Evaluate a closed-form field at the grid nodes.

    Parameters
    ----------
    grid : UniformGrid
    fn : callable
        Maps an ``(m, dim)`` array of points to ``m`` values.
    interior_only : bool
        Only evaluate at interior nodes; boundary entries are set to 0.  Use
        for data that is singular on the boundary.

    Raises
    ------
    ValueError
        If a sampled value is not finite.
    """
    nodes = grid.interior if interior_only else np.arange(grid.size)
    vals = np.asarray(fn(grid.coords[nodes]), dtype=float)
    vals = np.broadcast_to(vals, nodes.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        where = grid.multi_index[nodes[np.argmax(bad)]]
        raise ValueError(f"non-finite value at node {tuple(where)}")
    out = np.zeros(grid.size)
    out[nodes] = vals
    return GridFunction(grid, out)


def multilinear_weights(grid, points):
    """Sparse ``(m, M)`` matrix of multilinear interpolation weights.

    Row ``r`` holds the weights of the ``2^dim`` corners of the cell containing
    ``points[r]``.  Points must lie in the closed unit cube.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != grid.dim:
        raise ValueError("point dimension does not match grid")
    tol = 1e-12
    if np.any(pts < -tol) or np.any(pts > 1 + tol):
        raise ValueError("points outside the unit cube")
    s = np.clip(pts / grid.h, 0, grid.n - 1)
    base = np.minimum(np.floor(s).astype(np.int64), grid.n - 2)
    frac = s - base
    m = pts.shape[0]
    rows, cols, data = [], [], []
    for corner in np.ndindex(*(2,) * grid.dim):
        c = np.asarray(corner)
        w = np.prod(np.where(c == 1, frac, 1 - frac), axis=1)
        idx = base + c
        rows.append(np.arange(m))
        cols.append(np.ravel_multi_index(tuple(idx.T), grid.shape))
        data.append(w)
    mat = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, grid.size))
    return mat.tocsr()


def interpolate_to_fine(coarse, fine):
    """Multilinear interpolation of ``coarse`` onto the nodes of ``fine``."""
    if coarse.grid.dim != fine.dim:
        raise ValueError(
            f"dimension mismatch: {coarse.grid.dim} vs {fine.dim}")
    if coarse.grid == fine:
        return GridFunction(fine, coarse.values.copy())
    weights = multilinear_weights(coarse.grid, fine.coords)
    return GridFunction(fine, weights @ coarse.flat)
