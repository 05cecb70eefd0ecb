"""Shared test oracles, independent of the package's computational paths."""

import numpy as np
import pytest


def charpoly_coeffs(a):
    """Characteristic polynomial coefficients [1, c1, ..., cn] of a square
    matrix via the Faddeev-LeVerrier trace recursion."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    m = np.zeros_like(a)
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


def pf_value_oracle(a, scan_points=4096, bisect_iters=120):
    """Dominant-eigenvalue oracle: root-bracket the characteristic polynomial
    of the nonnegative shift of `a`.

    Scans downward from above the max row sum (where the polynomial is
    positive) to the first sign change, then bisects. Independent of any
    eigensolver or power iteration.
    """
    a = np.asarray(a, dtype=float)
    shift = float(np.min(np.diag(a)))
    b = a - shift * np.eye(a.shape[0])
    coeffs = charpoly_coeffs(b)
    row_sums = b.sum(axis=1)
    hi = float(np.max(row_sums)) + 1.0
    lo = max(0.0, float(np.min(row_sums))) - 1.0
    grid = np.linspace(hi, lo, scan_points)
    vals = np.polyval(coeffs, grid)
    sign_change = np.nonzero(vals[:-1] * vals[1:] <= 0)[0]
    assert sign_change.size, "oracle failed to bracket the dominant root"
    k = int(sign_change[0])
    x_hi, x_lo = grid[k], grid[k + 1]  # p(x_hi) >= 0 >= p(x_lo)
    for _ in range(bisect_iters):
        mid = 0.5 * (x_hi + x_lo)
        if np.polyval(coeffs, mid) >= 0.0:
            x_hi = mid
        else:
            x_lo = mid
    return 0.5 * (x_hi + x_lo) + shift


def random_metzler(rng, n, coupling=(0.1, 1.0), diag=(-1.0, 1.0)):
    """Random essentially nonnegative irreducible matrix with off-diagonals
    bounded away from zero (healthy spectral gap)."""
    a = rng.uniform(*coupling, size=(n, n))
    a[np.diag_indices(n)] = rng.uniform(*diag, size=n)
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
