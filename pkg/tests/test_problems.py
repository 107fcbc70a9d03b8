import numpy as np
import pytest

from monge_ampere.grid import create_grid
from monge_ampere.problems import PROBLEMS, lookup, max_error, mollified_dirac_f


def fd_hessian(fn, x, t=1e-3):
    """Fourth-order central difference Hessian of a vectorized closed form."""
    d = x.size
    E = np.eye(d) * t
    H = np.empty((d, d))
    f = lambda p: fn(p[None, :])[0]  # noqa: E731
    for i in range(d):
        for j in range(d):
            ei, ej = E[i], E[j]
            if i == j:
                H[i, i] = (-f(x + 2 * ei) + 16 * f(x + ei) - 30 * f(x)
                           + 16 * f(x - ei) - f(x - 2 * ei)) / (12 * t * t)
            else:
                # fourth order mixed difference
                s = 0.0
                for a, wa in ((1, 8), (-1, -8), (2, -1), (-2, 1)):
                    for b, wb in ((1, 8), (-1, -8), (2, -1), (-2, 1)):
                        s += wa * wb * f(x + a * ei + b * ej)
                H[i, j] = s / (144 * t * t)
    return H


def test_lookup_values():
    p = lookup("c2", 2)
    assert p.u_exact(np.zeros((1, 2)))[0] == 1.0
    assert p.f(np.zeros((1, 2)))[0] == 1.0
    p = lookup("c1_2d")
    x0 = np.full((1, 2), 0.5)
    assert p.u_exact(x0)[0] == 0.0 and p.f(x0)[0] == 0.0
    p = lookup("blowup", 3)
    assert p.u_exact(np.zeros((1, 3)))[0] == pytest.approx(-np.sqrt(3))
    assert p.f(np.zeros((1, 3)))[0] == pytest.approx(3 * 3**-2.5)


def test_lookup_errors():
    with pytest.raises(ValueError):
        lookup("parabola")
    with pytest.raises(ValueError):
        lookup("c2_2d", 3)
    with pytest.raises(ValueError):
        lookup("cone", 3)


@pytest.mark.parametrize("name", [k for k in PROBLEMS if not k.startswith("cone")])
def test_determinant_of_exact_hessian_is_f(name, rng):
    p = PROBLEMS[name]
    checked = 0
    while checked < 25:
        x = rng.uniform(0.05, 0.9, p.dim)
        r = np.linalg.norm(x - 0.5)
        if name.startswith("c1") and (abs(r - 0.2) < 0.02):
            continue
        H = fd_hessian(p.u_exact, x)
        f = p.f(x[None, :])[0]
        assert np.linalg.det(H) == pytest.approx(f, rel=1e-5, abs=1e-7)
        checked += 1


@pytest.mark.parametrize("name", ["c1_2d", "c1_3d"])
def test_c1_data_vanishes_on_ball(name, rng):
    p = PROBLEMS[name]
    pts = 0.5 + rng.uniform(-1, 1, (500, p.dim)) * 0.2 / np.sqrt(p.dim)
    assert np.all(p.f(pts) == 0)
    assert np.all(p.u_exact(pts) == 0)


@pytest.mark.parametrize("dim", [2, 3])
def test_blowup_gradient_unbounded_at_corner(dim):
    p = lookup("blowup", dim)
    norms = []
    for s in (1e-2, 1e-4, 1e-6):
        x = np.full((1, dim), 1 - s)
        t = s * 1e-3
        grad = [(p.u_exact(x + t * e) - p.u_exact(x - t * e))[0] / (2 * t)
                for e in np.eye(dim)]
        norms.append(np.linalg.norm(grad))
    assert norms[0] < norms[1] < norms[2] and norms[2] > 100


@pytest.mark.parametrize("name", list(PROBLEMS))
def test_boundary_data_is_trace_and_f_nonnegative(name, rng):
    p = PROBLEMS[name]
    g = create_grid(p.dim, 7)
    x = g.coords[g.boundary]
    np.testing.assert_array_equal(p.g(x), p.u_exact(x))
    assert np.all(p.f_on(g).flat >= 0)


def test_cone_exact_solution_is_distance():
    p = lookup("cone", 2)
    x = np.array([[0.5, 0.5], [0.8, 0.9], [0.0, 0.0]])
    np.testing.assert_allclose(p.u_exact(x), [0.0, 0.5, np.sqrt(0.5)])
    assert p.needs_convexify and p.needs_mollified_f


@pytest.mark.parametrize("n", [31, 63])
def test_mollified_dirac(n):
    g = create_grid(2, n)
    f = mollified_dirac_f(g)
    nz = np.argwhere(f.values)
    assert nz.tolist() == [[n // 2, n // 2]]
    assert f.values[n // 2, n // 2] == pytest.approx(4 * (n - 1) ** 2)
    assert f.flat.sum() * g.h**2 == pytest.approx(4.0)
    assert lookup("cone", 2).f_on(g).values[n // 2, n // 2] == f.values[n // 2, n // 2]


def test_mollified_dirac_even_n_rejected():
    with pytest.raises(ValueError):
        mollified_dirac_f(create_grid(2, 32))
    with pytest.raises(ValueError):
        lookup("cone", 2).check_grid(create_grid(2, 32))


def test_max_error_of_exact_sample_is_zero():
    p = lookup("c2", 2)
    g = create_grid(2, 9)
    assert max_error(p.exact_on(g), p) == 0.0
    shifted = p.exact_on(g).flat + 0.25
    assert max_error(shifted, p, g) == pytest.approx(0.25)
