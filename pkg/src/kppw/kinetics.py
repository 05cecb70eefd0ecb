"""Reaction terms, constant steady states, stability, and kinetic ODE integration.

The reaction is L u - c(u) o u with a competition law c that is either
Lotka-Volterra (c(u) = C u) or separated (c(u) = (b^T u) a). Two-species
systems additionally carry the mutation decomposition
L = diag(r) + eta * [[-1, 1], [1, -1]] @ diag(m) with m a unit positive
vector; any scale given for m is folded into eta, which makes eta unique.
"""

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    HypothesisViolatedError,
    NonPositiveLambdaAError,
    SingularCError,
    StepTooLargeError,
)
from .spectral import is_essentially_nonnegative, is_irreducible, pf_eigenpair

EXCHANGE = np.array([[-1.0, 1.0], [1.0, -1.0]])


# --- competition laws -------------------------------------------------------

@dataclass(frozen=True)
class LotkaVolterra:
    """Linear competition c(u) = C u with a positive matrix C."""

    C: np.ndarray

    def __post_init__(self):
        C = np.ascontiguousarray(self.C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("C must be square")
        object.__setattr__(self, "C", C)

    def intensity_matrix(self):
        return self.C


@dataclass(frozen=True)
class Separated:
    """Separated competition c(u) = b(u) a with linear b(u) = b^T u.

    `a` is normalized so max(a) = 1; the removed scale is folded into `b`,
    which leaves c unchanged.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=float)
        b = np.ascontiguousarray(self.b, dtype=float)
        if a.ndim != 1 or b.ndim != 1 or a.size != b.size:
            raise ValueError("a and b must be vectors of equal length")
        scale = float(np.max(a))
        if scale <= 0:
            raise ValueError("a must have a positive maximum")
        object.__setattr__(self, "a", a / scale)
        object.__setattr__(self, "b", b * scale)

    def intensity_matrix(self):
        # the equivalent Lotka-Volterra matrix of the linear separated law
        return np.outer(self.a, self.b)


CompetitionLaw = LotkaVolterra | Separated


# --- system specification ---------------------------------------------------

@dataclass(frozen=True)
class MutationDecomposition:
    r: np.ndarray
    eta: float
    m: np.ndarray

    def build_matrix(self):
        return np.diag(self.r) + self.eta * (EXCHANGE @ np.diag(self.m))


@dataclass(frozen=True)
class SystemSpec:
    """Full parameterization of one reaction-diffusion system.

    Construction validates shapes only; semantic hypotheses are checked by
    `check_hypotheses` (and enforced by the config loader), so degenerate
    limit systems remain constructible for study.
    """

    d: np.ndarray
    L: np.ndarray
    law: CompetitionLaw
    mutation: MutationDecomposition | None = None

    def __post_init__(self):
        d = np.ascontiguousarray(np.atleast_1d(self.d), dtype=float)
        L = np.ascontiguousarray(self.L, dtype=float)
        n = d.size
        if L.shape != (n, n):
            raise ValueError("L must be square with the same dimension as d")
        if self.law.intensity_matrix().shape != (n, n):
            raise ValueError("competition law dimension does not match d")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "L", L)

    @property
    def n(self):
        return self.d.size


def normalize_mutation(r, eta, m):
    """Unit-normalize m, folding its scale into eta."""
    r = np.ascontiguousarray(np.atleast_1d(r), dtype=float)
    m = np.ascontiguousarray(np.atleast_1d(m), dtype=float)
    if np.any(m <= 0):
        raise ValueError("m must be positive")
    scale = float(np.linalg.norm(m))
    return MutationDecomposition(r=r, eta=float(eta) * scale, m=m / scale)


def two_species_spec(d, r, eta, m, law) -> SystemSpec:
    """Build a two-species spec from the (r, eta, m) decomposition."""
    mut = normalize_mutation(r, eta, m)
    if mut.r.size != 2:
        raise ValueError("the mutation decomposition is defined for N = 2")
    return SystemSpec(d=np.asarray(d, float), L=mut.build_matrix(), law=law, mutation=mut)


def decompose_two_species(L) -> MutationDecomposition:
    """Recover (r, eta, m) from a 2x2 interaction matrix.

    r holds the column sums (the mutation part has zero column sums) and
    (eta, m) split the off-diagonal entries with |m| = 1.
    """
    L = np.asarray(L, dtype=float)
    if L.shape != (2, 2):
        raise ValueError("decomposition is defined for 2x2 matrices")
    lo, hi = L[1, 0], L[0, 1]
    if lo <= 0 or hi <= 0:
        raise ValueError("off-diagonal entries must be positive to decompose")
    r = L.sum(axis=0)
    eta = float(np.hypot(lo, hi))
    m = np.array([lo, hi]) / eta
    return MutationDecomposition(r=r, eta=eta, m=m)


# --- reaction and linearization ----------------------------------------------

def competition(spec: SystemSpec, u):
    """c(u); accepts shape (N,) or (N, M)."""
    u = np.asarray(u, dtype=float)
    law = spec.law
    if isinstance(law, LotkaVolterra):
        return law.C @ u
    bv = law.b @ u
    if u.ndim == 1:
        return bv * law.a
    return law.a[:, None] * bv[None, :]


def reaction(spec: SystemSpec, u):
    """L u - c(u) o u; accepts shape (N,) or (N, M)."""
    u = np.asarray(u, dtype=float)
    return spec.L @ u - competition(spec, u) * u


def linearization(spec: SystemSpec, u) -> np.ndarray:
    """Jacobian of the reaction at u: L - diag(c(u)) - diag(u) Dc(u)."""
    u = np.asarray(u, dtype=float)
    dc = spec.law.intensity_matrix()
    return spec.L - np.diag(competition(spec, u)) - np.diag(u) @ dc


# --- two-species closed forms -------------------------------------------------

class Regime(enum.Enum):
    EXTINCTION_2 = "Extinction2"
    COEXISTENCE = "Coexistence"
    BISTABLE = "Bistable"
    EXTINCTION_1 = "Extinction1"
    DEGENERATE = "Degenerate"


def v_m(r, C) -> np.ndarray:
    """Coexistence state of the two-species competitive system (adjugate
    formula). May have nonpositive components; the caller checks positivity."""
    r = np.asarray(r, dtype=float)
    C = np.asarray(C, dtype=float)
    det = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
    if abs(det) <= 1e-12:
        raise SingularCError(f"competition matrix determinant {det:g} is below 1e-12")
    return np.array(
        [r[0] * C[1, 1] - r[1] * C[0, 1], r[1] * C[0, 0] - r[0] * C[1, 0]]
    ) / det


def classify_two_species(r, C) -> Regime:
    """Regime of the mutation-free two-species competition kinetics."""
    r = np.asarray(r, dtype=float)
    C = np.asarray(C, dtype=float)
    q = r[0] / r[1]
    qa = C[0, 0] / C[1, 0]
    qb = C[0, 1] / C[1, 1]
    if abs(q - qa) <= 1e-12 and abs(q - qb) <= 1e-12:
        return Regime.DEGENERATE
    if q >= max(qa, qb) and q > min(qa, qb):
        return Regime.EXTINCTION_2
    if qb < q < qa:
        return Regime.COEXISTENCE
    if qb > q > qa:
        return Regime.BISTABLE
    return Regime.EXTINCTION_1


# --- steady states ------------------------------------------------------------

class Stability(enum.Enum):
    STABLE_NODE = "StableNode"
    SADDLE = "Saddle"
    UNSTABLE_NODE = "UnstableNode"
    SPIRAL_STABLE = "SpiralStable"
    SPIRAL_UNSTABLE = "SpiralUnstable"
    MARGINAL = "Marginal"


STABILITY_MARGIN = 1e-8


@dataclass(frozen=True)
class SteadyState:
    value: np.ndarray
    stability: Stability


def classify_stability(spec: SystemSpec, u) -> Stability:
    eig = np.linalg.eigvals(linearization(spec, u))
    re = eig.real
    if np.any(np.abs(re) <= STABILITY_MARGIN):
        return Stability.MARGINAL
    spiral = bool(np.any(np.abs(eig.imag) > STABILITY_MARGIN))
    if np.all(re < 0):
        return Stability.SPIRAL_STABLE if spiral else Stability.STABLE_NODE
    if np.all(re > 0):
        return Stability.SPIRAL_UNSTABLE if spiral else Stability.UNSTABLE_NODE
    return Stability.SADDLE


def v_star_separated(spec: SystemSpec, intensity=None) -> SteadyState:
    """Unique positive constant state under separated competition.

    With the stored linear intensity the level solves in closed form. A
    general increasing intensity can be passed as a callable (future
    proofing); its level is found by bisection along the ray through the
    weighted eigenvector. Stability is always tagged from the stored law.
    """
    law = spec.law
    if not isinstance(law, Separated):
        raise ValueError("v_star_separated requires a separated competition law")
    weighted = spec.L / law.a[:, None]  # diag(a)^{-1} L
    lam_a, n_a = pf_eigenpair(weighted)
    if lam_a <= 0:
        raise NonPositiveLambdaAError(
            f"weighted growth eigenvalue {lam_a:g} <= 0: no positive constant state"
        )
    if intensity is not None:
        alpha = _bisect_increasing(lambda t: intensity(t * n_a), lam_a)
    else:
        alpha = lam_a / float(law.b @ n_a)
    value = alpha * n_a
    return SteadyState(value=value, stability=classify_stability(spec, value))


def _bisect_increasing(f, target, tol=1e-14):
    hi = 1.0
    while f(hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise NonPositiveLambdaAError("intensity never reaches the growth level")
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


RESIDUAL_TOL = 1e-10


def steady_residual(spec: SystemSpec, u) -> float:
    return float(np.max(np.abs(reaction(spec, u))))


def constant_solutions_two_species(
    spec: SystemSpec, *, seeds_per_axis: int = 64, dedupe_tol: float = 1e-7
) -> list[SteadyState]:
    """All nonnegative constant solutions of the two-species system.

    Newton iterations (batched over a seeds_per_axis^2 grid of starting
    points) on L u = c(u) o u; converged roots are deduplicated and tagged
    with their linearized stability. The zero state is always included.
    """
    if spec.n != 2:
        raise ValueError("implemented for N = 2")
    L = spec.L
    C = spec.law.intensity_matrix()
    # search-box size; dense eigenvalues so reducible limit systems work too
    lam0 = float(np.max(np.linalg.eigvals(L).real))
    u_max = 2.0 * max(lam0, 0.5) / float(np.min(C))

    ax = np.linspace(0.0, u_max, seeds_per_axis)
    U = np.stack(np.meshgrid(ax, ax), axis=-1).reshape(-1, 2)
    alive = np.ones(len(U), dtype=bool)
    for _ in range(80):
        F = U @ L.T - (U @ C.T) * U
        cu = U @ C.T
        j00 = L[0, 0] - cu[:, 0] - U[:, 0] * C[0, 0]
        j01 = L[0, 1] - U[:, 0] * C[0, 1]
        j10 = L[1, 0] - U[:, 1] * C[1, 0]
        j11 = L[1, 1] - cu[:, 1] - U[:, 1] * C[1, 1]
        det = j00 * j11 - j01 * j10
        ok = alive & (np.abs(det) > 1e-14) & np.all(np.isfinite(U), axis=1)
        inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        du0 = (j11 * F[:, 0] - j01 * F[:, 1]) * inv_det
        du1 = (-j10 * F[:, 0] + j00 * F[:, 1]) * inv_det
        U[ok, 0] -= du0[ok]
        U[ok, 1] -= du1[ok]
        alive = ok & (np.max(np.abs(U), axis=1) < 10.0 * u_max)

    F = U @ L.T - (U @ C.T) * U
    good = alive & (np.max(np.abs(F), axis=1) <= 1e-12) & (U.min(axis=1) >= -1e-9)
    roots = U[good]
    roots[np.abs(roots) < 1e-12] = 0.0

    states = [np.zeros(2)]
    for u in roots:
        if steady_residual(spec, u) > RESIDUAL_TOL or np.any(u < 0):
            continue
        if all(np.linalg.norm(u - s) > dedupe_tol for s in states):
            states.append(u)
    states.sort(key=lambda s: (s[0], s[1]))
    return [SteadyState(value=s, stability=classify_stability(spec, s)) for s in states]


# --- mutation-rate thresholds ---------------------------------------------------

def _require_h7(spec: SystemSpec):
    if spec.n != 2 or spec.mutation is None or not isinstance(spec.law, LotkaVolterra):
        raise ValueError("requires a two-species Lotka-Volterra spec with (r, eta, m)")
    return spec.mutation.r, spec.mutation.m, spec.law.C


def lemma_thresholds(spec: SystemSpec, i: int) -> tuple[float, float]:
    """(eta_bar_i, rho_i): the mutation-rate ceiling and the level below
    which the i-th component of any front crosses exactly once.

    `i` is the 1-based species index; requires r_i/r_j > c_ij/c_jj.
    """
    r, m, C = _require_h7(spec)
    if i not in (1, 2):
        raise ValueError("species index must be 1 or 2")
    i -= 1
    j = 1 - i
    margin = r[i] / r[j] - C[i, j] / C[j, j]
    if margin <= 0:
        raise HypothesisViolatedError(
            f"requires r_{i + 1}/r_{j + 1} > c_{i + 1}{j + 1}/c_{j + 1}{j + 1}"
        )
    eta_bar = 0.5 * min(r[j] * C[j, i] / (m[i] * C[j, j]), r[j] / m[i] * margin)
    rho = 0.5 * (r[j] / C[i, i]) * margin
    return float(eta_bar), float(rho)


def linfty_eta_threshold(spec: SystemSpec, i: int) -> float:
    """Mutation-rate ceiling below which component i of any front stays below
    its single-species carrying level r_i / c_ii."""
    r, m, C = _require_h7(spec)
    i -= 1
    j = 1 - i
    return float(r[i] * C[i, j] / (m[j] * C[i, i]))


def carrying_levels(spec: SystemSpec) -> np.ndarray:
    """Single-species levels alpha_i = r_i / c_ii of the two-species system."""
    r, _, C = _require_h7(spec)
    return r / np.diag(C)


# --- kinetic integration ----------------------------------------------------------

class Trajectory(NamedTuple):
    t: np.ndarray
    u: np.ndarray  # (samples, N) or (samples, N, batch)


NEG_FLOOR = -1e-12


def integrate_kinetics(spec: SystemSpec, u0, T: float, dt: float) -> Trajectory:
    """Classic fourth-order Runge-Kutta on the space-homogeneous system.

    `u0` may be a single state (N,) or a batch (N, M) integrated in lockstep.
    The trajectory keeps roughly 1000 samples. Components that undershoot
    below -1e-12 abort with StepTooLargeError; smaller undershoots are
    clipped to zero.
    """
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    u = np.array(u0, dtype=float)
    if np.any(u < 0):
        raise ValueError("initial state must be nonnegative")
    nsteps = int(np.ceil(T / dt - 1e-12)) if T > 0 else 0
    stride = max(1, int(round(T / (1000.0 * dt))))

    times = [0.0]
    samples = [u.copy()]
    f = lambda v: reaction(spec, v)
    for k in range(nsteps):
        h = min(dt, T - k * dt)
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.min(u) < NEG_FLOOR:
            raise StepTooLargeError(
                f"state undershot to {np.min(u):g} at t = {(k + 1) * dt:g}; reduce dt"
            )
        np.maximum(u, 0.0, out=u)
        if (k + 1) % stride == 0 or k == nsteps - 1:
            times.append(min((k + 1) * dt, T))
            samples.append(u.copy())
    return Trajectory(np.array(times), np.array(samples))


# --- hypothesis report --------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    passed: bool
    message: str


@dataclass(frozen=True)
class HypothesisReport:
    checks: list[HypothesisCheck] = field(default_factory=list)

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        return "\n".join(
            f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {c.message}" for c in self.checks
        )


def check_hypotheses(spec: SystemSpec) -> HypothesisReport:
    """Structural validation: interaction matrix shape hypotheses, positive
    growth, law positivity, and (when present) the mutation decomposition."""
    checks = []

    ess = is_essentially_nonnegative(spec.L)
    checks.append(
        HypothesisCheck(
            "essential nonnegativity",
            ess,
            "off-diagonal entries of L are nonnegative" if ess else "L has a negative off-diagonal entry",
        )
    )
    irr = ess and is_irreducible(spec.L)
    checks.append(
        HypothesisCheck(
            "irreducibility",
            irr,
            "off-diagonal support graph strongly connected" if irr else "support graph not strongly connected",
        )
    )
    if irr:
        lam = pf_eigenpair(spec.L).value
        checks.append(
            HypothesisCheck(
                "positive growth",
                lam > 0,
                f"dominant eigenvalue of L is {lam:.6g}",
            )
        )
    else:
        checks.append(HypothesisCheck("positive growth", False, "not evaluated (L inadmissible)"))

    checks.append(
        HypothesisCheck(
            "positive diffusion", bool(np.all(spec.d > 0)), f"d = {spec.d.tolist()}"
        )
    )

    law = spec.law
    if isinstance(law, LotkaVolterra):
        pos = bool(np.all(law.C > 0))
        checks.append(
            HypothesisCheck(
                "competition positivity",
                pos,
                "C is entrywise positive (superlinear competition holds by construction)"
                if pos
                else "C has a nonpositive entry",
            )
        )
    else:
        pos = bool(np.all(law.a > 0)) and bool(np.all(law.b > 0))
        checks.append(
            HypothesisCheck(
                "separated-law positivity",
                pos,
                "a and b positive, max(a) = 1 (separated structure holds by construction)"
                if pos
                else "a or b has a nonpositive entry",
            )
        )

    if spec.mutation is not None:
        mut = spec.mutation
        ok = (
            spec.n == 2
            and bool(np.all(mut.r > 0))
            and mut.eta > 0
            and bool(np.all(mut.m > 0))
            and abs(np.linalg.norm(mut.m) - 1.0) <= 1e-12
            and np.array_equal(mut.build_matrix(), spec.L)
        )
        checks.append(
            HypothesisCheck(
                "mutation decomposition",
                ok,
                f"r = {mut.r.tolist()}, eta = {mut.eta:.6g}, m = {mut.m.tolist()}"
                if ok
                else "decomposition invalid (needs N = 2, r > 0, eta > 0, unit positive m, exact rebuild)",
            )
        )
    return HypothesisReport(checks)
