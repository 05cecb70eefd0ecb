import numpy as np
import pytest

from conftest import random_metzler
from kppw.dispersion import (
    DispersionInput,
    decay_roots,
    edge_eigenvector,
    lambda_of_mu,
    minimal_speed,
    predict_edge_profile,
)
from kppw.errors import NoRealRootsError
from kppw.kinetics import two_species_spec, LotkaVolterra
from kppw.spectral import pf_eigenpair

EXCHANGE = np.array([[-1.0, 1.0], [1.0, -1.0]])
SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])
ONES2 = np.array([1.0, 1.0])


def scalar_like_input():
    # equal diffusion, unit dominant eigenvalue
    return DispersionInput(ONES2, np.eye(2) + 0.1 * EXCHANGE)


def quadratic_pf(trace, det):
    return 0.5 * (trace + np.sqrt(trace * trace - 4.0 * det))


def test_input_validation():
    with pytest.raises(ValueError):
        DispersionInput(np.array([1.0, -1.0]), SWAP)
    with pytest.raises(ValueError):
        DispersionInput(ONES2, np.diag([1.0, 2.0]))  # reducible
    with pytest.raises(ValueError):
        DispersionInput(ONES2, -np.eye(2) + 0.5 * SWAP)  # dominant eigenvalue -0.5


def test_lambda_of_mu_examples():
    inp = DispersionInput(ONES2, SWAP)
    assert lambda_of_mu(inp, 0.0) == pytest.approx(1.0, abs=1e-11)
    assert lambda_of_mu(inp, 2.0) == pytest.approx(5.0, abs=1e-11)
    # unequal diffusion: dominant root of the 2x2 characteristic polynomial
    inp = DispersionInput(np.array([1.0, 2.0]), SWAP)
    expected = quadratic_pf(trace=1.0 + 2.0, det=1.0 * 2.0 - 1.0)
    assert lambda_of_mu(inp, 1.0) == pytest.approx(expected, abs=1e-10)
    inp = DispersionInput(np.array([1.0, 3.0]), SWAP)
    assert lambda_of_mu(inp, 1.0) == pytest.approx(2.0 + np.sqrt(2.0), abs=1e-10)


def test_minimal_speed_scalar_reduction_random(rng):
    for _ in range(10):
        L = random_metzler(rng, 3)
        lam = pf_eigenpair(L).value
        if lam <= 1e-3:
            L = L + (1.0 - lam) * np.eye(3)
            lam = pf_eigenpair(L).value
        c_star, mu_star = minimal_speed(DispersionInput(np.ones(3), L))
        assert c_star == pytest.approx(2.0 * np.sqrt(lam), abs=1e-8)
        assert mu_star == pytest.approx(np.sqrt(lam), abs=1e-8)


def test_minimal_speed_unit_example():
    c_star, mu_star = minimal_speed(scalar_like_input())
    assert c_star == pytest.approx(2.0, abs=1e-9)
    assert mu_star == pytest.approx(1.0, abs=1e-9)


def test_minimal_speed_two_branch_limit():
    # small mutation: the speed curve approaches the max of the two scalar
    # branches; its minimum sits at the branch crossing
    spec = two_species_spec(
        [1.0, 1.0 / 3.0], [1.0, 6.0], 1e-3, [1.0, 1.0],
        LotkaVolterra(np.array([[1.0, 0.2], [0.5, 6.0]])),
    )
    inp = DispersionInput(spec.d, spec.L)
    c_star, mu_star = minimal_speed(inp)

    mus = np.linspace(0.5, 8.0, 200_001)
    branch_min = np.min(np.maximum(mus**2 + 1.0, mus**2 / 3.0 + 6.0) / mus)
    assert abs(c_star - branch_min) <= 1e-3

    # dense local eigenvalue grid around the minimizer (independent route)
    local = mu_star * np.linspace(0.995, 1.005, 20_001)
    pencils = local[:, None, None] ** 2 * np.diag(spec.d) + spec.L
    lams = np.linalg.eigvals(pencils).real.max(axis=1)
    grid_min = float(np.min(lams / local))
    assert c_star <= grid_min + 1e-12
    assert grid_min - c_star <= 1e-6


def test_decay_roots_examples():
    inp = scalar_like_input()
    roots = decay_roots(inp, 2.5)
    assert roots.mu1 == pytest.approx(0.5, abs=1e-10)
    assert roots.mu2 == pytest.approx(2.0, abs=1e-10)
    assert roots.k_c == 0

    c_star, mu_star = minimal_speed(inp)
    tangent = decay_roots(inp, c_star)
    assert tangent.k_c == 1
    assert tangent.mu1 == tangent.mu2 == pytest.approx(mu_star, abs=1e-10)

    with pytest.raises(NoRealRootsError):
        decay_roots(inp, c_star - 0.1)


def test_decay_roots_satisfy_dispersion(rng):
    for _ in range(5):
        d = rng.uniform(0.3, 2.0, size=2)
        L = random_metzler(rng, 2) + 1.2 * np.eye(2)
        inp = DispersionInput(d, L)
        c_star, _ = minimal_speed(inp)
        c = c_star * 1.3
        roots = decay_roots(inp, c)
        for mu in (roots.mu1, roots.mu2):
            assert lambda_of_mu(inp, mu) / mu == pytest.approx(c, abs=1e-9)


def test_minimal_speed_permutation_invariance(rng):
    d = np.array([0.7, 1.4, 2.2])
    L = random_metzler(rng, 3) + np.eye(3)
    perm = np.array([2, 0, 1])
    a = minimal_speed(DispersionInput(d, L))
    b = minimal_speed(DispersionInput(d[perm], L[np.ix_(perm, perm)]))
    assert a.c_star == pytest.approx(b.c_star, abs=1e-9)
    assert a.mu_star == pytest.approx(b.mu_star, abs=1e-8)


def test_minimal_speed_diffusion_scaling(rng):
    L = random_metzler(rng, 2) + np.eye(2)
    lam = pf_eigenpair(L).value
    for s in (0.25, 1.0, 3.0):
        c_star, _ = minimal_speed(DispersionInput(s * ONES2, L))
        assert c_star == pytest.approx(2.0 * np.sqrt(s * lam), abs=1e-9)


def test_minimal_speed_diagonal_lower_bound(rng):
    for _ in range(5):
        d = rng.uniform(0.2, 2.0, size=3)
        L = random_metzler(rng, 3, diag=(0.2, 1.5))
        c_star, _ = minimal_speed(DispersionInput(d, L))
        assert c_star >= 2.0 * np.sqrt(np.max(d * np.diag(L))) - 1e-9


def test_two_species_bound_approaches_mutation_free_limit():
    r = np.array([1.0, 6.0])
    C = np.array([[1.0, 0.2], [0.5, 6.0]])
    d = np.array([1.0, 1.0 / 3.0])
    limit_bound = 2.0 * np.sqrt(np.max(d * r))
    previous_bound = -np.inf
    for eta in (1e-1, 1e-2, 1e-3, 1e-4):
        spec = two_species_spec(d, r, eta, ONES2, LotkaVolterra(C))
        c_star, _ = minimal_speed(DispersionInput(spec.d, spec.L))
        bound = 2.0 * np.sqrt(np.max(d * np.diag(spec.L)))
        assert c_star >= bound - 1e-9
        assert bound > previous_bound  # bounds increase toward the limit bound
        previous_bound = bound
    assert limit_bound - previous_bound <= 1e-4


def test_edge_eigenvector_examples():
    inp = scalar_like_input()
    n_pf = pf_eigenpair(inp.L).vector
    for mu in (0.3, 1.0, 3.0):
        assert edge_eigenvector(inp, mu) == pytest.approx(n_pf, abs=1e-10)
    inp = DispersionInput(np.array([1.0, 2.0]), SWAP)
    # eigenvector of [[1,1],[1,3]] at its dominant root 2+sqrt(2)
    lam = 2.0 + np.sqrt(2.0)
    expected = np.array([1.0, lam - 1.0])
    expected /= np.linalg.norm(expected)
    inp = DispersionInput(np.array([1.0, 3.0]), SWAP)
    assert edge_eigenvector(inp, 1.0) == pytest.approx(expected, abs=1e-10)


def test_predict_edge_profile():
    inp = scalar_like_input()
    n_pf = pf_eigenpair(inp.L).vector
    # supercritical speed: no polynomial factor
    profile = predict_edge_profile(inp, 2.5, amplitude=1.0, xi=0.0)
    assert profile == pytest.approx(n_pf, abs=1e-10)
    assert predict_edge_profile(inp, 2.5, 1.0, 2.0) == pytest.approx(
        np.exp(-1.0) * n_pf, abs=1e-9
    )
    # at the minimal speed the polynomial factor vanishes at xi = 0
    c_star, _ = minimal_speed(inp)
    assert predict_edge_profile(inp, c_star, 1.0, 0.0) == pytest.approx(
        np.zeros(2), abs=1e-12
    )
    with pytest.raises(NoRealRootsError):
        predict_edge_profile(inp, 1.0, 1.0, 0.0)
