"""Preset experiments and the vanishing-mutation sweep harness.

Presets wire a system, grid, initial data and diagnostics into named
studies. Initial data are piecewise-constant stacks of the relevant steady
states with linear ramps (the long-time structure is insensitive to these
details). Preset `eta` arguments follow the common bookkeeping where m is
given up to scale (here (1, 1)); the loader folds the scale into eta and
stores the unit-m decomposition.
"""

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics as diag
from . import pde
from .dispersion import DispersionInput, minimal_speed
from .errors import (
    EdgeWindowEmptyError,
    HypothesisViolatedError,
    InsufficientSamplesError,
    UnknownPresetError,
)
from .kinetics import (
    LotkaVolterra,
    Separated,
    SystemSpec,
    carrying_levels,
    check_hypotheses,
    classify_two_species,
    lemma_thresholds,
    two_species_spec,
    v_m,
    v_star_separated,
)
from .spectral import pf_eigenpair


@dataclass(frozen=True)
class Scenario:
    name: str
    spec: SystemSpec
    grid: pde.Grid1D
    init: pde.InitialData
    T: float
    snapshot_every: float
    window: pde.WindowPolicy = None
    u_cap: float | None = None
    method: str = "euler"
    front_component: int | str = "total"
    front_level: float = 0.5
    edge_thresholds: tuple = (diag.EDGE_LO, diag.EDGE_HI)
    back_fraction: float = 0.1
    speed_fit_window: float = 0.5
    collinearity_direction: np.ndarray | None = None
    track_bump: bool = False
    references: dict = field(default_factory=dict)
    # raw two-species parameters kept for eta rebuilds in sweeps
    raw: dict = field(default_factory=dict)

    def with_eta(self, eta: float) -> "Scenario":
        """Same scenario with a different mutation rate (two-species only)."""
        if not self.raw:
            raise ValueError(f"scenario {self.name!r} does not support eta rebuilds")
        spec = two_species_spec(
            self.raw["d"], self.raw["r"], eta, self.raw["m"], LotkaVolterra(self.raw["C"])
        )
        return replace(self, spec=spec, references=dict(self.references, eta=eta))


PRESET_NAMES = (
    "fig1_bistable",
    "fig2_monostable",
    "h6_collinearity",
    "saddle_connection_5_1",
    "diagonal_5_4",
)

EXCHANGE_COUPLING = 0.2  # off-diagonal exchange strength of the demo matrix I + 0.2 [[-1,1],[1,-1]]


def preset(name: str, eta: float | None = None) -> Scenario:
    """Named preset scenarios; `eta` applies to fig2_monostable only."""
    builders = {
        "fig1_bistable": _fig1_bistable,
        "fig2_monostable": lambda: _fig2_monostable(0.25 if eta is None else eta),
        "h6_collinearity": _h6_collinearity,
        "saddle_connection_5_1": _saddle_connection,
        "diagonal_5_4": _diagonal_symmetric,
    }
    if name not in builders:
        raise UnknownPresetError(f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}")
    s = builders[name]()
    report = check_hypotheses(s.spec)
    if not report.ok:
        raise HypothesisViolatedError(f"preset {name!r} fails validation:\n{report}")
    return s


def _fig1_bistable() -> Scenario:
    # bistable two-species terrace: slow strong competitor chases the fast one
    d = np.array([1.0, 1.5125])
    r = np.array([1.0, 1.0])
    m = np.array([1.0, 1.0])
    C = np.array([[1.0, 20.0], [110.0, 1.0]])
    spec = two_species_spec(d, r, 0.025, m, LotkaVolterra(C))
    grid = pde.Grid1D(x_left=0.0, dx=0.1, nx=5000)
    alpha = carrying_levels(spec)
    init = pde.Terrace(
        bands=(
            (0.0, 100.0, (alpha[0], 0.0)),
            (100.0, 200.0, (0.0, alpha[1])),
        ),
        width=0.5,
    )
    return Scenario(
        name="fig1_bistable",
        spec=spec,
        grid=grid,
        init=init,
        T=100.0,
        snapshot_every=5.0,
        window=None,
        u_cap=3.0,  # fields stay near 1; keeps the stiffness bound (and dt) realistic
        front_component="total",
        front_level=0.5,
        references={"regime": classify_two_species(r, C).value, "alpha": alpha},
        raw={"d": d, "r": r, "m": m, "C": C},
    )


def _fig2_monostable(eta: float) -> Scenario:
    # monostable coexistence: fast species leads, a transient bump of it
    # rides between the edge and the mixed state filling in behind
    d = np.array([1.0, 1.0 / 3.0])
    r = np.array([1.0, 6.0])
    m = np.array([1.0, 1.0])
    C = np.array([[1.0, 0.2], [0.5, 6.0]])
    spec = two_species_spec(d, r, eta, m, LotkaVolterra(C))
    grid = pde.Grid1D(x_left=0.0, dx=0.1, nx=2048)
    mixed = v_m(r, C)
    alpha = carrying_levels(spec)
    init = pde.Terrace(
        bands=(
            (0.0, 30.0, tuple(mixed)),
            (30.0, 60.0, (0.0, alpha[1])),
        ),
        width=0.5,
    )
    return Scenario(
        name="fig2_monostable",
        spec=spec,
        grid=grid,
        init=init,
        T=40.0,
        snapshot_every=2.0,
        window=None,
        front_component=2,
        front_level=0.4,
        track_bump=True,
        references={
            "regime": classify_two_species(r, C).value,
            "alpha": alpha,
            "v_m": mixed,
            "eta": eta,
        },
        raw={"d": d, "r": r, "m": m, "C": C},
    )


def _h6_collinearity() -> Scenario:
    # separated competition with equal diffusion: the whole front collapses
    # onto the dominant eigendirection and connects 0 to the mixed state
    d = np.array([1.0, 1.0])
    r = np.array([1.0, 1.0])
    m = np.array([1.0, 1.0])
    law = Separated(a=np.array([1.0, 1.0]), b=np.array([1.0, 1.0]))
    spec = two_species_spec(d, r, EXCHANGE_COUPLING, m, law)
    grid = pde.Grid1D(x_left=0.0, dx=0.1, nx=2048)
    # deliberately off the symmetric direction: the run must restore it
    init = pde.FrontStep(level=(0.55, 0.45), interface=20.0, width=4.0)
    vstar = v_star_separated(spec).value
    direction = pf_eigenpair(spec.L).vector
    return Scenario(
        name="h6_collinearity",
        spec=spec,
        grid=grid,
        init=init,
        T=150.0,
        snapshot_every=5.0,
        window=pde.FollowFront(component="total", level=0.25, margin=0.2),
        front_component="total",
        front_level=0.25,
        collinearity_direction=direction,
        references={"v_star": vstar, "direction": direction, "c_star": 2.0},
    )


def _saddle_connection() -> Scenario:
    # three positive constant states; diagonal initial data rides the
    # invariant ray straight into the saddle
    d = np.array([1.0, 1.0])
    r = np.array([1.0, 1.0])
    m = np.array([1.0, 1.0])
    C = 0.1 * np.array([[1.0, 9.0], [9.0, 1.0]])
    spec = two_species_spec(d, r, EXCHANGE_COUPLING, m, LotkaVolterra(C))
    grid = pde.Grid1D(x_left=0.0, dx=0.1, nx=2048)
    init = pde.FrontStep(level=(1.0, 1.0), interface=20.0, width=4.0)
    return Scenario(
        name="saddle_connection_5_1",
        spec=spec,
        grid=grid,
        init=init,
        T=60.0,
        snapshot_every=2.0,
        window=None,
        front_component="total",
        front_level=1.0,
        references={"saddle": np.array([1.0, 1.0]), "c_star": 2.0},
        raw={"d": d, "r": r, "m": m, "C": C},
    )


def _diagonal_symmetric() -> Scenario:
    # fully species-symmetric system: equal components stay equal exactly
    # and obey the scalar logistic front
    d = np.array([1.0, 1.0])
    r = np.array([1.0, 1.0])
    m = np.array([1.0, 1.0])
    C = np.array([[1.0, 2.0], [2.0, 1.0]])
    spec = two_species_spec(d, r, 0.1, m, LotkaVolterra(C))
    grid = pde.Grid1D(x_left=0.0, dx=0.1, nx=2048)
    level = 1.0 / 3.0  # diagonal steady state of the symmetric system
    init = pde.FrontStep(level=(level, level), interface=20.0, width=4.0)
    return Scenario(
        name="diagonal_5_4",
        spec=spec,
        grid=grid,
        init=init,
        T=50.0,
        snapshot_every=2.0,
        window=None,
        front_component="total",
        front_level=level,
        references={"diagonal_level": level, "c_star": 2.0},
        raw={"d": d, "r": r, "m": m, "C": C},
    )


# --- running ------------------------------------------------------------------

def run_scenario(s: Scenario) -> tuple[list[pde.Field], diag.DiagnosticsReport]:
    """Execute the scenario and collect its diagnostics (deterministic)."""
    snaps = pde.run(
        s.spec, s.grid, s.init, s.T, s.snapshot_every,
        window=s.window, u_cap=s.u_cap, method=s.method,
    )
    report = diag.DiagnosticsReport()
    report.front = diag.track_front(snaps, s.front_component, s.front_level)
    try:
        report.measured_speed = diag.spreading_speed(report.front, s.speed_fit_window)
    except InsufficientSamplesError:
        report.measured_speed = None
    final = snaps[-1]
    try:
        report.edge = diag.edge_decay_fit(final, s.edge_thresholds)
    except EdgeWindowEmptyError:
        report.edge = None
    report.back = diag.back_state(final, s.back_fraction)
    if s.collinearity_direction is not None:
        report.collinearity = diag.collinearity_error(final, s.collinearity_direction)
    report.plateaus = diag.plateau_detect(final)
    if s.track_bump:
        i = bump_species(s.spec)
        baseline = float(report.back[i - 1])
        report.bump_amplitude, report.bump_length = diag.bump_metrics(
            final, i, baseline=baseline
        )
    return snaps, report


# --- eta sweeps ---------------------------------------------------------------

class ConnectionTag(enum.Enum):
    ZERO_TO_VS = "ZeroToVs"
    ALPHA_J_TO_VS = "AlphaJToVs"
    SEMI_EXTINCT = "SemiExtinctZeroToAlphaI"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class SweepRecord:
    eta: float
    c_star_eta: float
    measured_speed: float | None
    bump_amplitude: float
    bump_length: float
    back_state: np.ndarray
    tag: ConnectionTag


STATE_MATCH_TOL = 5e-2
PROBE_OFFSET = 6.0  # distance from the normalization crossing to the probes


def bump_species(spec: SystemSpec) -> int:
    """1-based index of the species whose semi-extinct front leads the
    invasion (largest d_i r_i) among those satisfying the one-crossing
    lemma hypothesis."""
    r = spec.mutation.r
    order = sorted((1, 2), key=lambda i: spec.d[i - 1] * r[i - 1], reverse=True)
    for i in order:
        try:
            lemma_thresholds(spec, i)
            return i
        except HypothesisViolatedError:
            continue
    raise HypothesisViolatedError("neither species satisfies the one-crossing hypothesis")


def stable_target(spec: SystemSpec, i: int) -> np.ndarray:
    """Limit state selected by the monostable classification for species i:
    the semi-extinct level when growth dominates cross-competition, the
    mixed state otherwise."""
    r = spec.mutation.r
    C = spec.law.C
    j = 3 - i
    alpha = carrying_levels(spec)
    if r[i - 1] / r[j - 1] >= C[i - 1, i - 1] / C[j - 1, i - 1]:
        out = np.zeros(2)
        out[i - 1] = alpha[i - 1]
        return out
    return v_m(r, C)


def extract_normalized_profile(fld: pde.Field, component: int, rho: float):
    """Profile in the frame where component i crosses rho at xi = 0.

    The crossing is the rightmost downward passage through rho (unique for
    admissible fronts). Returns (xi, values); raises if the component never
    reaches rho."""
    u = fld.values[component - 1]
    above = np.nonzero(u >= rho)[0]
    if above.size == 0:
        raise HypothesisViolatedError("component never reaches the normalization level")
    j = int(above[-1])
    x = fld.grid.x()
    if j == fld.grid.nx - 1:
        x_rho = float(x[-1])
    else:
        frac = (u[j] - rho) / (u[j] - u[j + 1])
        x_rho = float(x[j] + frac * fld.grid.dx)
    return x - x_rho, fld.values


def _classify_connection(xi, values, i, v_s, alpha):
    j = 3 - i
    x_probe_back, x_probe_front = -PROBE_OFFSET, PROBE_OFFSET
    if xi[0] > x_probe_back or xi[-1] < x_probe_front:
        return ConnectionTag.UNDETERMINED
    behind = np.array([np.interp(x_probe_back, xi, values[k]) for k in range(2)])
    ahead = np.array([np.interp(x_probe_front, xi, values[k]) for k in range(2)])
    alpha_i = np.zeros(2)
    alpha_i[i - 1] = alpha[i - 1]
    alpha_j = np.zeros(2)
    alpha_j[j - 1] = alpha[j - 1]

    def near(u, target):
        return float(np.max(np.abs(u - target))) <= STATE_MATCH_TOL

    if near(ahead, np.zeros(2)):
        if near(behind, v_s):
            return ConnectionTag.ZERO_TO_VS
        if near(behind, alpha_i) and ahead[j - 1] <= STATE_MATCH_TOL and behind[j - 1] <= STATE_MATCH_TOL:
            return ConnectionTag.SEMI_EXTINCT
    elif near(ahead, alpha_j) and near(behind, v_s):
        return ConnectionTag.ALPHA_J_TO_VS
    return ConnectionTag.UNDETERMINED


def _sweep_one(base: Scenario, eta: float) -> SweepRecord:
    s = base.with_eta(eta)
    snaps, report = run_scenario(s)
    spec = s.spec
    i = bump_species(spec)
    _, rho_i = lemma_thresholds(spec, i)
    v_s = stable_target(spec, i)
    rho = min(rho_i, float(v_s[i - 1]))
    alpha = carrying_levels(spec)
    final = snaps[-1]
    xi, values = extract_normalized_profile(final, i, rho)
    tag = _classify_connection(xi, values, i, v_s, alpha)
    c_star = minimal_speed(DispersionInput(spec.d, spec.L)).c_star
    baseline = float(report.back[i - 1])
    amplitude, length = diag.bump_metrics(final, i, baseline=baseline)
    return SweepRecord(
        eta=eta,
        c_star_eta=c_star,
        measured_speed=report.measured_speed,
        bump_amplitude=amplitude,
        bump_length=length,
        back_state=report.back,
        tag=tag,
    )


def sweep_eta(base: Scenario, etas, max_workers: int | None = None) -> list[SweepRecord]:
    """One run per mutation rate (conventionally a descending list), executed
    as independent concurrent tasks. Records are assembled in input order
    regardless of completion order, and each record depends only on its own
    eta, so reordering the list merely reorders the records."""
    etas = [float(e) for e in etas]
    if any(e <= 0 for e in etas):
        raise ValueError("mutation rates must be positive")
    if len(etas) == 1:
        return [_sweep_one(base, etas[0])]
    with ThreadPoolExecutor(max_workers=max_workers or min(4, len(etas))) as pool:
        return list(pool.map(lambda e: _sweep_one(base, e), etas))
