"""Grid directions for wide stencils and the orthogonal bases built from them."""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product
from math import gcd

import numpy as np

# Named stencils: node count -> (dim, width, max nonzero components per direction)
NAMED_STENCILS = {
    9: (2, 1, None),
    17: (2, 2, None),
    33: (2, 3, None),
    19: (3, 1, 2),
    27: (3, 1, None),
}

SPHERE_SAMPLES = 10**6


def _normalized(v):
    for c in v:
        if c != 0:
            return c > 0
    return False


def generate_directions(dim, width, max_nonzero=None):
    """Grid directions with max-norm at most ``width``.

    Directions have coprime integer components and are sign-normalized so the
    first nonzero component is positive.  Ordered by max-norm, then
    lexicographically, so narrower stencils are prefixes of wider ones.

    >>> generate_directions(2, 1)
    [(0, 1), (1, -1), (1, 0), (1, 1)]
    """
    if width < 1:
        raise ValueError(f"stencil width must be >= 1, got {width}")
    out = []
    for v in product(range(-width, width + 1), repeat=dim):
        if not _normalized(v):
            continue
        if gcd(*(abs(c) for c in v)) != 1:
            continue
        if max_nonzero is not None and sum(c != 0 for c in v) > max_nonzero:
            continue
        out.append(v)
    out.sort(key=lambda v: (max(abs(c) for c in v), v))
    return out


def enumerate_orthogonal_bases(directions, dim):
    """All sets of ``dim`` mutually orthogonal directions.

    Each set is returned once as an increasing tuple of indices into
    ``directions``; the list is in lexicographic order of those tuples.
    """
    vecs = np.asarray(directions, dtype=np.int64)
    gram = vecs @ vecs.T
    bases = [
        combo for combo in combinations(range(len(vecs)), dim)
        if all(gram[a, b] == 0 for a, b in combinations(combo, 2))
    ]
    if not bases:
        raise ValueError("direction set admits no orthogonal basis")
    return bases


def _fibonacci_sphere(count):
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    r = np.sqrt(1 - z**2)
    phi = np.pi * (1 + 5**0.5) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def directional_resolution(directions, samples=SPHERE_SAMPLES):
    """Worst-case angle between a unit vector and the nearest stencil line.

    Exact in 2D (half the largest gap between sorted direction angles).  In 3D
    the maximum is taken over ``samples`` Fibonacci-sphere points, which
    slightly underestimates the true value.
    """
    vecs = np.asarray(directions, dtype=float)
    if vecs.size == 0:
        raise ValueError("empty direction set")
    dim = vecs.shape[1]
    if dim == 2:
        angles = np.sort(np.mod(np.arctan2(vecs[:, 1], vecs[:, 0]), np.pi))
        gaps = np.diff(np.append(angles, angles[0] + np.pi))
        return float(gaps.max() / 2)
    unit = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    worst = 0.0
    for chunk in np.array_split(_fibonacci_sphere(samples), max(1, samples // 50000)):
        cos = np.abs(chunk @ unit.T).max(axis=1)
        worst = max(worst, float(np.arccos(np.clip(cos.min(), -1, 1))))
    return worst


@dataclass(frozen=True)
class StencilBasisSet:
    dim: int
    directions: tuple
    bases: tuple
    dtheta: float

    @property
    def points(self):
        """Number of stencil nodes: two arms per direction plus the center."""
        return 2 * len(self.directions) + 1

    @property
    def width(self):
        return max(max(abs(c) for c in v) for v in self.directions)

    def basis_vectors(self, k):
        return [self.directions[j] for j in self.bases[k]]


@lru_cache(maxsize=None)
def build_stencil(dim, width, max_nonzero=None):
    dirs = generate_directions(dim, width, max_nonzero)
    return StencilBasisSet(
        dim=dim,
        directions=tuple(dirs),
        bases=tuple(enumerate_orthogonal_bases(dirs, dim)),
        dtheta=directional_resolution(dirs),
    )


def named_stencil(points, dim=None):
    """Stencil by node count: 9, 17, 33 (2D) or 19, 27 (3D)."""
    try:
        sdim, width, max_nonzero = NAMED_STENCILS[int(points)]
    except KeyError:
        raise ValueError(f"unknown stencil {points!r}; "
                         f"choose from {sorted(NAMED_STENCILS)}") from None
    if dim is not None and dim != sdim:
        raise ValueError(f"{points}-point stencil is {sdim}D, not {dim}D")
    return build_stencil(sdim, width, max_nonzero)


def axis_stencil(dim):
    """The (2*dim+1)-point stencil: coordinate axes only."""
    dirs = [tuple(int(i == k) for i in range(dim)) for k in range(dim)]
    dirs.sort()
    return StencilBasisSet(dim, tuple(dirs), (tuple(range(dim)),),
                           directional_resolution(dirs, samples=20000))
