import numpy as np
import pytest

from conftest import pf_value_oracle, random_metzler
from kppw.errors import NonConvergenceError, NotIrreducibleError
from kppw.spectral import (
    is_essentially_nonnegative,
    is_irreducible,
    pf_eigenpair,
    pf_projection,
)

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])
EXCHANGE = np.array([[-1.0, 1.0], [1.0, -1.0]])


@pytest.mark.parametrize(
    "matrix, expected",
    [
        ([[-1, 1], [1, -1]], True),
        ([[0, -0.1], [1, 0]], False),
        (np.eye(3), True),
    ],
)
def test_essentially_nonnegative(matrix, expected):
    assert is_essentially_nonnegative(matrix) is expected


@pytest.mark.parametrize(
    "matrix, expected",
    [
        (SWAP, True),
        (np.diag([1.0, 2.0]), False),
        ([[0, 1, 0], [0, 0, 1], [1, 0, 0]], True),
    ],
)
def test_irreducible(matrix, expected):
    assert is_irreducible(matrix) is expected


def test_irreducible_rejects_negative_offdiagonal():
    with pytest.raises(NotIrreducibleError):
        is_irreducible([[0, -0.1], [1, 0]])


def test_pf_swap_matrix():
    lam, vec = pf_eigenpair(SWAP)
    assert lam == pytest.approx(1.0, abs=1e-12)
    assert vec == pytest.approx(np.full(2, 1 / np.sqrt(2)), abs=1e-12)


def test_pf_equal_row_sums():
    lam, vec = pf_eigenpair(np.eye(2) + 0.2 * EXCHANGE)
    assert lam == pytest.approx(1.0, abs=1e-12)
    assert vec == pytest.approx(np.full(2, 1 / np.sqrt(2)), abs=1e-12)


def test_pf_one_by_one():
    lam, vec = pf_eigenpair([[-3.5]])
    assert lam == -3.5
    assert vec == pytest.approx([1.0])


def test_pf_rejects_reducible():
    with pytest.raises(NotIrreducibleError):
        pf_eigenpair(np.diag([1.0, 2.0]))


def test_pf_matches_charpoly_oracle(rng):
    for _ in range(25):
        a = random_metzler(rng, 4)
        lam, vec = pf_eigenpair(a)
        assert abs(lam - pf_value_oracle(a)) <= 1e-9
        assert np.max(np.abs(a @ vec - lam * vec)) <= 1e-10


def test_pf_residual_and_diag_bound(rng):
    for n in (2, 3, 5, 8):
        a = random_metzler(rng, n)
        lam, vec = pf_eigenpair(a)
        assert np.max(np.abs(a @ vec - lam * vec)) <= 1e-10
        assert np.all(vec > 0)
        assert abs(np.linalg.norm(vec) - 1.0) <= 1e-12
        assert lam >= np.max(np.diag(a)) - 1e-12


def test_pf_shift_invariance(rng):
    for _ in range(10):
        a = random_metzler(rng, 3)
        s = rng.uniform(-5, 5)
        base = pf_eigenpair(a)
        shifted = pf_eigenpair(a + s * np.eye(3))
        assert shifted.value == pytest.approx(base.value + s, abs=1e-10)
        assert np.max(np.abs(shifted.vector - base.vector)) <= 1e-10


def test_pf_transpose_value(rng):
    for _ in range(10):
        a = random_metzler(rng, 4)
        assert pf_eigenpair(a.T).value == pytest.approx(pf_eigenpair(a).value, abs=1e-10)


def test_pf_nonconvergence_on_tiny_gap():
    # shifted matrix has eigenvalue ratio 1 - O(1e-8): the residual cannot
    # reach 1e-12 within the iteration cap
    a = np.array([[0.0, 4e-8], [1e-8, 0.0]])
    with pytest.raises(NonConvergenceError):
        pf_eigenpair(a)


def test_projection_symmetric_swap():
    assert pf_projection(SWAP) == pytest.approx(0.5 * np.ones((2, 2)), abs=1e-12)


def test_projection_asymmetric_analytic():
    # right eigenvector (sqrt2, 1), left (1, sqrt2), eigenvalue sqrt2
    a = np.array([[0.0, 2.0], [1.0, 0.0]])
    proj = pf_projection(a)
    n = np.array([np.sqrt(2.0), 1.0])
    expected = np.outer(n, n[::-1]) / (2.0 * np.sqrt(2.0))
    assert proj == pytest.approx(expected, abs=1e-10)
    assert proj @ n == pytest.approx(n, abs=1e-10)


def test_projection_identities(rng):
    for _ in range(10):
        a = random_metzler(rng, 4)
        proj = pf_projection(a)
        lam = pf_eigenpair(a).value
        assert proj @ proj == pytest.approx(proj, abs=1e-10)
        assert np.linalg.matrix_rank(proj, tol=1e-8) == 1
        assert a @ proj == pytest.approx(lam * proj, abs=1e-9)
        assert proj @ a == pytest.approx(lam * proj, abs=1e-9)


def test_projection_scaling_invariance(rng):
    # the defining ratio is unchanged when either eigenvector is rescaled
    a = random_metzler(rng, 3)
    n = pf_eigenpair(a).vector
    n_hat = pf_eigenpair(a.T).vector
    reference = np.outer(n, n_hat) / (n_hat @ n)
    scaled = np.outer(7.5 * n, 0.2 * n_hat) / ((0.2 * n_hat) @ (7.5 * n))
    assert scaled == pytest.approx(reference, abs=1e-14)
    assert pf_projection(a) == pytest.approx(reference, abs=1e-10)
