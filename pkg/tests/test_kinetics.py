import numpy as np
import pytest
from scipy.integrate import solve_ivp

from kppw.errors import (
    HypothesisViolatedError,
    NonPositiveLambdaAError,
    SingularCError,
    StepTooLargeError,
)
from kppw.kinetics import (
    LotkaVolterra,
    Regime,
    Separated,
    Stability,
    SystemSpec,
    check_hypotheses,
    classify_two_species,
    constant_solutions_two_species,
    decompose_two_species,
    integrate_kinetics,
    lemma_thresholds,
    linearization,
    linfty_eta_threshold,
    reaction,
    two_species_spec,
    v_m,
    v_star_separated,
)
from kppw.spectral import pf_eigenpair

EXCHANGE = np.array([[-1.0, 1.0], [1.0, -1.0]])
FIG2_R = np.array([1.0, 6.0])
FIG2_C = np.array([[1.0, 0.2], [0.5, 6.0]])


def spec_counterexample():
    # L = I + 0.2 exchange, C = 0.1 [[1,9],[9,1]]: three positive constant states
    return two_species_spec(
        [1.0, 1.0], [1.0, 1.0], 0.2, [1.0, 1.0],
        LotkaVolterra(0.1 * np.array([[1.0, 9.0], [9.0, 1.0]])),
    )


def spec_h6():
    return two_species_spec(
        [1.0, 1.0], [1.0, 1.0], 0.2, [1.0, 1.0],
        Separated(np.array([1.0, 1.0]), np.array([1.0, 1.0])),
    )


def spec_fig2(eta=0.1):
    return two_species_spec([1.0, 1.0 / 3.0], FIG2_R, eta, [1.0, 1.0], LotkaVolterra(FIG2_C))


# --- construction -----------------------------------------------------------------

def test_mutation_normalization_folds_scale():
    spec = spec_fig2(0.1)
    mut = spec.mutation
    assert abs(np.linalg.norm(mut.m) - 1.0) <= 1e-15
    assert mut.eta == pytest.approx(0.1 * np.sqrt(2.0))
    assert np.array_equal(mut.build_matrix(), spec.L)
    # diagonal carries r_i - eta m_i, off-diagonals eta m_j
    assert spec.L[0, 0] == pytest.approx(1.0 - 0.1)
    assert spec.L[0, 1] == pytest.approx(0.1)


def test_decompose_two_species_roundtrip():
    spec = spec_fig2(0.05)
    mut = decompose_two_species(spec.L)
    assert mut.r == pytest.approx(spec.mutation.r, abs=1e-15)
    assert mut.eta == pytest.approx(spec.mutation.eta, rel=1e-15)


def test_separated_normalizes_a():
    law = Separated(np.array([2.0, 1.0]), np.array([1.0, 1.0]))
    assert np.max(law.a) == 1.0
    assert law.b == pytest.approx([2.0, 2.0])  # scale folded into b


# --- reaction and linearization ------------------------------------------------------

def test_reaction_zero_state():
    for spec in (spec_counterexample(), spec_h6(), spec_fig2()):
        assert reaction(spec, np.zeros(2)) == pytest.approx(np.zeros(2))


def test_reaction_counterexample_equilibrium():
    assert reaction(spec_counterexample(), np.ones(2)) == pytest.approx(np.zeros(2), abs=1e-14)


def test_reaction_single_species_axis():
    # u = e1: first component reduces to r1 - eta m1 - c11 by hand expansion
    spec = spec_fig2(0.1)
    eta, m = spec.mutation.eta, spec.mutation.m
    out = reaction(spec, np.array([1.0, 0.0]))
    assert out[0] == pytest.approx(1.0 - eta * m[0] - FIG2_C[0, 0])
    assert out[1] == pytest.approx(eta * m[0] - FIG2_C[1, 0] * 0.0)


def test_reaction_batched_columns():
    spec = spec_fig2()
    pts = np.array([[0.2, 1.0, 0.5], [0.4, 0.1, 0.5]])
    batch = reaction(spec, pts)
    for k in range(3):
        assert batch[:, k] == pytest.approx(reaction(spec, pts[:, k]))


def test_linearization_at_zero_is_interaction_matrix():
    for spec in (spec_counterexample(), spec_h6()):
        assert linearization(spec, np.zeros(2)) == pytest.approx(spec.L)


def test_linearization_counterexample_saddle():
    eig = np.linalg.eigvals(linearization(spec_counterexample(), np.ones(2)))
    assert eig.real.min() < -1e-3 < 1e-3 < eig.real.max()


@pytest.mark.parametrize("make_spec", [spec_counterexample, spec_h6, spec_fig2])
def test_linearization_matches_finite_differences(make_spec, rng):
    spec = make_spec()
    h = 1e-6
    for _ in range(100):
        u = rng.uniform(0.0, 2.0, size=2)
        jac = linearization(spec, u)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (reaction(spec, u + e) - reaction(spec, u - e)) / (2.0 * h)
            assert np.max(np.abs(jac[:, j] - fd)) <= 1e-6


# --- two-species closed forms ----------------------------------------------------------

def test_v_m_values():
    assert v_m(FIG2_R, FIG2_C) == pytest.approx([4.8 / 5.9, 5.5 / 5.9], abs=1e-14)
    assert v_m([1.0, 1.0], np.eye(2)) == pytest.approx([1.0, 1.0])
    with pytest.raises(SingularCError):
        v_m([1.0, 1.0], np.ones((2, 2)))


@pytest.mark.parametrize(
    "r, C, expected",
    [
        ([1, 1], [[1, 20], [110, 1]], Regime.BISTABLE),
        ([1, 6], [[1, 0.2], [0.5, 6]], Regime.COEXISTENCE),
        ([2, 1], [[1, 1], [1, 1]], Regime.EXTINCTION_2),
        ([1, 2], [[1, 1], [1, 1]], Regime.EXTINCTION_1),
        ([1, 1], [[1, 1], [1, 1]], Regime.DEGENERATE),
    ],
)
def test_classify_two_species(r, C, expected):
    assert classify_two_species(np.array(r, float), np.array(C, float)) is expected


def test_classify_species_swap_symmetry(rng):
    swap = {
        Regime.EXTINCTION_1: Regime.EXTINCTION_2,
        Regime.EXTINCTION_2: Regime.EXTINCTION_1,
        Regime.COEXISTENCE: Regime.COEXISTENCE,
        Regime.BISTABLE: Regime.BISTABLE,
        Regime.DEGENERATE: Regime.DEGENERATE,
    }
    for _ in range(50):
        r = rng.uniform(0.2, 3.0, size=2)
        C = rng.uniform(0.2, 3.0, size=(2, 2))
        swapped_r = r[::-1]
        swapped_C = C[::-1, ::-1]
        assert classify_two_species(swapped_r, swapped_C) is swap[classify_two_species(r, C)]


# --- steady states -------------------------------------------------------------------

def test_v_star_separated_swap_interaction():
    spec = SystemSpec(
        d=np.ones(2),
        L=np.array([[0.0, 1.0], [1.0, 0.0]]),
        law=Separated(np.ones(2), np.ones(2)),
    )
    state = v_star_separated(spec)
    assert state.value == pytest.approx([0.5, 0.5], abs=1e-12)
    assert reaction(spec, state.value) == pytest.approx(np.zeros(2), abs=1e-12)


def test_v_star_separated_h6():
    state = v_star_separated(spec_h6())
    assert state.value == pytest.approx([0.5, 0.5], abs=1e-12)
    assert state.stability is Stability.STABLE_NODE


def test_v_star_separated_bisection_agrees_with_closed_form():
    spec = spec_h6()
    closed = v_star_separated(spec).value
    bisected = v_star_separated(spec, intensity=lambda v: float(np.sum(v))).value
    assert bisected == pytest.approx(closed, abs=1e-10)


def test_v_star_separated_no_positive_state():
    spec = SystemSpec(
        d=np.ones(2),
        L=-np.eye(2) + 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]]),
        law=Separated(np.ones(2), np.ones(2)),
    )
    with pytest.raises(NonPositiveLambdaAError):
        v_star_separated(spec)


def test_constant_solutions_counterexample_triple():
    spec = spec_counterexample()
    states = constant_solutions_two_species(spec)
    values = [s.value for s in states]
    root = np.sqrt(7.5)
    expected = [
        np.zeros(2),
        np.array([3.0 - root, 3.0 + root]),
        np.array([1.0, 1.0]),
        np.array([3.0 + root, 3.0 - root]),
    ]
    assert len(values) == 4
    for got, want in zip(values, expected):
        assert got == pytest.approx(want, abs=1e-9)
        assert np.max(np.abs(reaction(spec, got))) <= 1e-10
    tags = [s.stability for s in states]
    assert tags[1] is Stability.STABLE_NODE
    assert tags[2] is Stability.SADDLE
    assert tags[3] is Stability.STABLE_NODE


def test_constant_solutions_stable_under_seed_refinement():
    spec = spec_counterexample()
    coarse = constant_solutions_two_species(spec)
    fine = constant_solutions_two_species(spec, seeds_per_axis=128)
    assert len(coarse) == len(fine)
    for a, b in zip(coarse, fine):
        assert a.value == pytest.approx(b.value, abs=1e-9)


def test_constant_solutions_decoupled_limit():
    # zero-mutation limit: reducible interaction, single-species levels appear
    spec = SystemSpec(d=np.ones(2), L=np.diag([1.0, 2.0]), law=LotkaVolterra(np.eye(2)))
    values = [s.value for s in constant_solutions_two_species(spec)]
    for target in ([0, 0], [0, 2], [1, 0], [1, 2]):
        assert any(np.allclose(v, target, atol=1e-9) for v in values)


# --- thresholds ---------------------------------------------------------------------

def test_lemma_thresholds_values():
    spec = spec_fig2(0.1)
    eta_bar, rho = lemma_thresholds(spec, 1)
    m1 = 1.0 / np.sqrt(2.0)
    margin = 1.0 / 6.0 - 0.2 / 6.0
    assert rho == pytest.approx(0.5 * 6.0 * margin)  # = 0.4
    assert eta_bar == pytest.approx(0.5 * min(6.0 * 0.5 / (m1 * 6.0), 6.0 / m1 * margin))


def test_lemma_thresholds_hypothesis_violated():
    # raise c12 so r1/r2 < c12/c22 for species 1
    spec = two_species_spec(
        [1.0, 1.0], FIG2_R, 0.1, [1.0, 1.0],
        LotkaVolterra(np.array([[1.0, 2.0], [0.5, 6.0]])),
    )
    with pytest.raises(HypothesisViolatedError):
        lemma_thresholds(spec, 1)


def test_linfty_eta_threshold():
    spec = spec_fig2(0.1)
    m2 = 1.0 / np.sqrt(2.0)
    assert linfty_eta_threshold(spec, 1) == pytest.approx(1.0 * 0.2 / (m2 * 1.0))


# --- kinetic integration ----------------------------------------------------------------

def test_integrate_holds_equilibrium():
    spec = spec_h6()
    vstar = v_star_separated(spec).value
    traj = integrate_kinetics(spec, vstar, T=100.0, dt=0.01)
    assert np.max(np.abs(traj.u - vstar)) <= 1e-8


def test_integrate_converges_to_v_star(rng):
    spec = spec_h6()
    vstar = v_star_separated(spec).value
    u0 = rng.uniform(0.05, 2.5, size=(2, 20))
    traj = integrate_kinetics(spec, u0, T=200.0, dt=0.01)
    assert traj.u.shape[1:] == (2, 20)
    assert np.max(np.abs(traj.u[-1] - vstar[:, None])) <= 1e-6


def test_integrate_saddle_escape_matches_ivp_oracle():
    spec = spec_counterexample()
    u0 = np.array([1.01, 0.99])
    traj = integrate_kinetics(spec, u0, T=120.0, dt=0.005)
    oracle = solve_ivp(
        lambda _t, u: reaction(spec, u), (0.0, 120.0), u0, rtol=1e-10, atol=1e-12
    )
    endpoint = oracle.y[:, -1]
    assert traj.u[-1] == pytest.approx(endpoint, abs=1e-6)
    # leaves the saddle toward the species-1-dominant stable node
    assert endpoint == pytest.approx([3.0 + np.sqrt(7.5), 3.0 - np.sqrt(7.5)], abs=1e-6)


def test_integrate_keeps_dominant_ray_invariant():
    spec = spec_h6()
    n_pf = pf_eigenpair(spec.L).vector
    traj = integrate_kinetics(spec, 0.05 * n_pf, T=50.0, dt=0.01)
    for u in traj.u:
        sine = np.linalg.norm(u - (u @ n_pf) * n_pf) / np.linalg.norm(u)
        assert sine <= 1e-8


def test_integrate_step_too_large():
    spec = spec_counterexample()
    with pytest.raises(StepTooLargeError):
        integrate_kinetics(spec, np.array([8.0, 8.0]), T=50.0, dt=5.0)


def test_integrate_rejects_negative_initial():
    with pytest.raises(ValueError):
        integrate_kinetics(spec_h6(), np.array([-0.1, 0.5]), T=1.0, dt=0.01)


# --- hypothesis report ---------------------------------------------------------------

def test_check_hypotheses_fig1_passes():
    spec = two_species_spec(
        [1.0, 1.5125], [1.0, 1.0], 0.025, [1.0, 1.0],
        LotkaVolterra(np.array([[1.0, 20.0], [110.0, 1.0]])),
    )
    report = check_hypotheses(spec)
    assert report.ok, str(report)


def test_check_hypotheses_negative_offdiagonal_fails():
    spec = SystemSpec(
        d=np.ones(2),
        L=np.array([[1.0, -0.1], [0.5, 1.0]]),
        law=LotkaVolterra(np.ones((2, 2))),
    )
    report = check_hypotheses(spec)
    assert not report.ok
    assert any("nonnegativity" in c.name for c in report.failures)


def test_check_hypotheses_nonpositive_growth_fails():
    spec = SystemSpec(
        d=np.ones(2),
        L=-2.0 * np.eye(2) + np.array([[0.0, 1.0], [1.0, 0.0]]),
        law=LotkaVolterra(np.ones((2, 2))),
    )
    report = check_hypotheses(spec)
    assert not report.ok
    assert any("growth" in c.name for c in report.failures)
