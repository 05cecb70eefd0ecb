"""Spectral quantities and desk-scale front simulation of non-cooperative
KPP reaction-diffusion systems."""

from .dispersion import (
    DecayRoots,
    DispersionInput,
    SpeedResult,
    decay_roots,
    edge_eigenvector,
    lambda_of_mu,
    minimal_speed,
    predict_edge_profile,
)
from .kinetics import (
    LotkaVolterra,
    Regime,
    Separated,
    Stability,
    SteadyState,
    SystemSpec,
    check_hypotheses,
    classify_two_species,
    constant_solutions_two_species,
    integrate_kinetics,
    lemma_thresholds,
    linearization,
    reaction,
    two_species_spec,
    v_m,
    v_star_separated,
)
from .pde import CompactBump, Field, FollowFront, FrontStep, Grid1D, Terrace, backend, run
from .scenarios import ConnectionTag, Scenario, SweepRecord, preset, run_scenario, sweep_eta
from .spectral import (
    Eigenpair,
    is_essentially_nonnegative,
    is_irreducible,
    pf_eigenpair,
    pf_projection,
)

__version__ = "0.1.0"
