"""Oracles shared by the test modules."""

import numpy as np

from monge_ampere.grid import GridFunction, create_grid, sample


def quadratic(H, center=0.5):
    """``x -> 1/2 (x - c)^T H (x - c)`` as a vectorized closed form."""
    H = np.asarray(H, float)

    def fn(x):
        y = x - center
        return 0.5 * np.einsum("mi,ij,mj->m", y, H, y)
    return fn


def random_spd(rng, dim, lo=1.0, hi=4.0):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q @ np.diag(rng.uniform(lo, hi, dim)) @ q.T


def fd_jacobian(residual, vals, interior, step):
    """Central differences of ``residual(all node values)`` over interior unknowns."""
    cols = []
    for node in interior:
        up, dn = vals.copy(), vals.copy()
        up[node] += step
        dn[node] -= step
        cols.append((residual(up) - residual(dn)) / (2 * step))
    return np.column_stack(cols)


def sampled(dim, n, fn):
    return sample(create_grid(dim, n), fn)



# (criterion id, passed, detail) rows filled in by the acceptance tests
ACCEPTANCE = []


def record(criterion, ok, detail):
    """Log one acceptance check and fail the calling test if it did not pass."""
    ok = bool(ok)
    ACCEPTANCE.append((str(criterion), ok, detail))
    print(f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"
