from itertools import combinations
from math import atan, gcd, pi

import numpy as np
import pytest
from hypothesis import given, strategies as st

from monge_ampere.stencil import (axis_stencil, build_stencil, directional_resolution,
                                  enumerate_orthogonal_bases, generate_directions,
                                  named_stencil)


def brute_dtheta_2d(directions, samples=200_001):
    theta = np.linspace(0, np.pi, samples)
    unit = np.column_stack([np.cos(theta), np.sin(theta)])
    vecs = np.asarray(directions, float)
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return np.arccos(np.clip(np.abs(unit @ vecs.T).max(axis=1), -1, 1)).max()


def test_nine_point_directions():
    assert set(generate_directions(2, 1)) == {(1, 0), (0, 1), (1, 1), (1, -1)}


def test_seventeen_point_adds_knight_moves():
    extra = set(generate_directions(2, 2)) - set(generate_directions(2, 1))
    assert extra == {(1, 2), (2, 1), (2, -1), (1, -2)}


@pytest.mark.parametrize("points,n_dir,n_bases", [
    (9, 4, 2), (17, 8, 4), (33, 16, 8), (19, 9, 4), (27, 13, 4)])
def test_named_stencil_sizes(points, n_dir, n_bases):
    s = named_stencil(points)
    assert len(s.directions) == n_dir
    assert s.points == points
    assert len(s.bases) == n_bases


def test_width_must_be_positive():
    with pytest.raises(ValueError):
        generate_directions(2, 0)
    with pytest.raises(ValueError):
        named_stencil(25)
    with pytest.raises(ValueError):
        named_stencil(19, dim=2)


@given(st.sampled_from([(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2)]))
def test_direction_invariants(case):
    dim, width = case
    dirs = generate_directions(dim, width)
    assert len(set(dirs)) == len(dirs)
    for v in dirs:
        assert max(abs(c) for c in v) <= width
        assert gcd(*(abs(c) for c in v)) == 1
        assert next(c for c in v if c) > 0
    # pairwise non-parallel
    vecs = np.asarray(dirs, float)
    cos = np.abs(vecs @ vecs.T) / np.outer(*(2 * [np.linalg.norm(vecs, axis=1)]))
    assert np.all(cos[~np.eye(len(dirs), dtype=bool)] < 1 - 1e-12)


@pytest.mark.parametrize("points", [9, 17, 33, 19, 27])
def test_bases_are_exactly_the_orthogonal_sets(points):
    s = named_stencil(points)
    vecs = np.asarray(s.directions)
    brute = [c for c in combinations(range(len(vecs)), s.dim)
             if all(vecs[a] @ vecs[b] == 0 for a, b in combinations(c, 2))]
    assert list(s.bases) == brute
    axes = tuple(sorted(s.directions.index(tuple(int(i == k) for i in range(s.dim)))
                        for k in range(s.dim)))
    assert axes in s.bases


def test_each_2d_direction_pairs_with_its_rotation():
    for width in (1, 2, 3):
        s = build_stencil(2, width)
        seen = [j for b in s.bases for j in b]
        assert sorted(seen) == list(range(len(s.directions)))


def test_nineteen_point_bases():
    s = named_stencil(19)
    bases = {frozenset(s.basis_vectors(k)) for k in range(len(s.bases))}
    assert frozenset({(1, 0, 0), (0, 1, 0), (0, 0, 1)}) in bases
    assert frozenset({(1, 1, 0), (1, -1, 0), (0, 0, 1)}) in bases


def test_dtheta_2d():
    assert named_stencil(9).dtheta == pytest.approx(pi / 8, abs=1e-15)
    assert named_stencil(17).dtheta == pytest.approx(atan(0.5) / 2, abs=1e-15)
    assert named_stencil(17).dtheta == pytest.approx(0.2318, abs=1e-4)
    for w in (1, 2, 3, 4):
        dirs = generate_directions(2, w)
        assert directional_resolution(dirs) == pytest.approx(brute_dtheta_2d(dirs), abs=1e-5)


def test_dtheta_decreases_with_width():
    vals = [build_stencil(2, w).dtheta for w in range(1, 7)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.1


def test_dtheta_3d_sampled_close_to_exact():
    # worst direction for the 19-point set is the body diagonal
    exact = np.arccos(np.sqrt(2 / 3))
    got = named_stencil(19).dtheta
    assert exact - 1e-3 < got <= exact + 1e-12


def test_axis_stencil():
    s = axis_stencil(3)
    assert s.points == 7 and s.bases == ((0, 1, 2),)


def test_empty_basis_set_is_an_error():
    with pytest.raises(ValueError):
        enumerate_orthogonal_bases([(1, 1), (1, 2)], 2)
