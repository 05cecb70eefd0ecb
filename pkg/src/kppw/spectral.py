"""Perron-Frobenius eigentheory for essentially nonnegative irreducible matrices.

Dense arithmetic throughout; intended for small systems (N <= 16, larger
untested). Every function is pure and safe to call concurrently.
"""

from typing import NamedTuple

import numpy as np

from .errors import NonConvergenceError, NotIrreducibleError

RESIDUAL_TOL = 1e-12
MAX_ITER = 100_000


class Eigenpair(NamedTuple):
    """Dominant eigenvalue with its unit positive eigenvector."""

    value: float
    vector: np.ndarray


def _as_square(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def is_essentially_nonnegative(a) -> bool:
    """True iff every off-diagonal entry is >= 0."""
    a = _as_square(a)
    off = a - np.diag(np.diag(a))
    return bool(np.all(off >= 0.0))


def is_irreducible(a) -> bool:
    """True iff the off-diagonal support graph is strongly connected.

    Support uses exact zero tests (entries are user-specified values, not
    computed quantities). Rejects matrices that are not essentially
    nonnegative.
    """
    a = _as_square(a)
    if not is_essentially_nonnegative(a):
        raise NotIrreducibleError("matrix is not essentially nonnegative")
    n = a.shape[0]
    if n == 1:
        return True
    support = (a != 0.0) & ~np.eye(n, dtype=bool)
    return _reaches_all(support, 0) and _reaches_all(support.T, 0)


def _reaches_all(adj, start):
    # breadth-first reachability on a boolean adjacency matrix
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    frontier = [start]
    while frontier:
        nxt = []
        for i in frontier:
            for j in np.nonzero(adj[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    nxt.append(j)
        frontier = nxt
    return bool(seen.all())


def pf_eigenpair(a, *, tol=RESIDUAL_TOL, max_iter=MAX_ITER, bail_factor=None) -> Eigenpair:
    """Dominant eigenvalue and unit positive eigenvector.

    Power iteration on the shifted matrix A - (min diag - 1) I; the strictly
    positive shift margin makes the iteration matrix primitive for any
    irreducible input, so a zero or periodic dominant eigenvalue cannot
    stall it. Convergence is measured by the max-norm residual of the
    eigen-equation itself (the same residual holds for A and the shifted
    matrix), not by iterate differences.

    `bail_factor`, when set, demands the residual shrink by at least that
    factor every 100 iterations (checked after a warm-up) and raises
    NonConvergenceError early otherwise; for callers that have a fallback
    for near-defective input and cannot afford the full iteration cap.
    """
    a = _as_square(a)
    if not is_irreducible(a):
        raise NotIrreducibleError("matrix is not irreducible")
    n = a.shape[0]
    if n == 1:
        return Eigenpair(float(a[0, 0]), np.ones(1))

    shift = 1.0 - float(np.min(np.diag(a)))
    b = a + shift * np.eye(n)
    v = np.full(n, 1.0 / np.sqrt(n))
    checkpoint = np.inf
    for k in range(max_iter):
        w = b @ v
        lam = float(v @ w)
        resid = float(np.max(np.abs(w - lam * v)))
        if resid <= tol:
            return Eigenpair(lam - shift, v)
        if bail_factor is not None and k % 100 == 99:
            if k >= 200 and resid * bail_factor > checkpoint:
                break
            checkpoint = resid
        v = w / np.linalg.norm(w)
    raise NonConvergenceError(
        f"power iteration did not reach residual {tol:g} "
        "(near-defective or near-reducible input)"
    )


def pf_projection(l) -> np.ndarray:
    """Rank-one spectral projector onto the dominant eigenvector.

    n n_hat^T / (n_hat^T n) with n, n_hat the unit positive eigenvectors of
    the matrix and its transpose. Invariant under rescaling of either
    eigenvector.
    """
    l = _as_square(l)
    n = pf_eigenpair(l).vector
    n_hat = pf_eigenpair(l.T).vector
    return np.outer(n, n_hat) / float(n_hat @ n)
