import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monge_ampere.grid import (GridFunction, create_grid, interpolate_to_fine,
                               multilinear_weights, sample)


def test_smallest_grid():
    g = create_grid(2, 3)
    assert g.h == 0.5
    assert g.interior.tolist() == [4]
    np.testing.assert_allclose(g.coords[g.interior[0]], [0.5, 0.5])
    assert g.boundary.size == 8


@pytest.mark.parametrize("dim,n,h,n_int", [(2, 31, 1 / 30, 29**2), (3, 7, 1 / 6, 5**3)])
def test_table_grids(dim, n, h, n_int):
    g = create_grid(dim, n)
    assert g.h == pytest.approx(h, rel=1e-15)
    assert g.n_interior == n_int == g.interior.size


@pytest.mark.parametrize("dim,n", [(1, 5), (4, 5), (2, 2), (3, 0)])
def test_rejects_bad_shapes(dim, n):
    with pytest.raises(ValueError):
        create_grid(dim, n)


@given(st.sampled_from([2, 3]), st.integers(3, 12))
def test_node_classification(dim, n):
    g = create_grid(dim, n)
    assert g.interior.size + g.boundary.size == g.size == n**dim
    assert np.intersect1d(g.interior, g.boundary).size == 0
    on_edge = np.any((g.multi_index == 0) | (g.multi_index == n - 1), axis=1)
    np.testing.assert_array_equal(on_edge, g.boundary_mask)
    # row-major order of the multi-index
    flat = np.ravel_multi_index(tuple(g.multi_index.T), g.shape)
    np.testing.assert_array_equal(flat, np.arange(g.size))
    assert g.h * (n - 1) == pytest.approx(1.0, abs=1e-15)


def test_interior_numbering():
    g = create_grid(2, 5)
    num = g.interior_number
    assert np.all(num[g.boundary] == -1)
    np.testing.assert_array_equal(num[g.interior], np.arange(9))


def test_sample_values():
    g = create_grid(2, 5)
    np.testing.assert_array_equal(sample(g, lambda x: np.ones(len(x))).values, 1.0)
    u = sample(g, lambda x: np.exp(np.sum(x**2, axis=1) / 2))
    assert u.values[0, 0] == 1.0
    f = sample(g, lambda x: 2 * (2 - np.sum(x**2, axis=1)) ** -2.0, interior_only=True)
    assert f.values[2, 2] == pytest.approx(2 / 1.5**2)


def test_sample_rejects_non_finite_unless_interior_only():
    g = create_grid(2, 5)

    def blowup(x):
        with np.errstate(divide="ignore"):
            return 1 / (2 - np.sum(x**2, axis=1))

    with pytest.raises(ValueError, match="non-finite"):
        sample(g, blowup)
    f = sample(g, blowup, interior_only=True)
    assert np.all(f.values[[0, -1], :] == 0)


def test_grid_function_is_read_only():
    g = create_grid(2, 4)
    u = GridFunction(g, np.arange(16.0))
    assert u.values.shape == (4, 4)
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0
    v = u.with_interior(np.zeros(4))
    assert v.values[1, 1] == 0 and v.values[0, 1] == 1
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(15))


def test_interpolation_identity_and_linear_exactness():
    coarse, fine = create_grid(2, 3), create_grid(2, 5)
    lin = sample(coarse, lambda x: x[:, 0] + x[:, 1])
    out = interpolate_to_fine(lin, fine)
    np.testing.assert_allclose(out.flat, fine.coords.sum(axis=1), atol=1e-15)
    same = interpolate_to_fine(lin, coarse)
    np.testing.assert_array_equal(same.values, lin.values)
    with pytest.raises(ValueError):
        interpolate_to_fine(lin, create_grid(3, 5))


def test_interpolation_exact_on_multilinear_3d():
    coarse, fine = create_grid(3, 4), create_grid(3, 7)
    fn = lambda x: 1 + x[:, 0] * x[:, 1] * x[:, 2] - 2 * x[:, 1] * x[:, 2]  # noqa: E731
    out = interpolate_to_fine(sample(coarse, fn), fine)
    np.testing.assert_allclose(out.flat, fn(fine.coords), atol=1e-14)


def test_interpolation_error_is_second_order():
    # bilinear error on |x|^2 is at most h^2/4 per coordinate: h^2/2 in total
    coarse, fine = create_grid(2, 5), create_grid(2, 9)
    fn = lambda x: np.sum(x**2, axis=1)  # noqa: E731
    err = np.abs(interpolate_to_fine(sample(coarse, fn), fine).flat - fn(fine.coords)).max()
    h = coarse.h
    assert err == pytest.approx(h**2 / 2)


@settings(max_examples=30)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=2))
def test_weights_form_partition_of_unity(pt):
    W = multilinear_weights(create_grid(2, 6), np.array([pt]))
    assert W.sum() == pytest.approx(1.0)
    assert W.min() >= 0
