"""Linear dispersion machinery: minimal front speed, decay roots, edge direction.

Everything derives from the one-parameter matrix pencil mu^2 diag(d) + L and
its dominant eigenvalue. The speed curve g(mu) = lambda(mu) / mu is minimized
over mu > 0; traveling fronts exist only at or above that minimum.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BracketFailureError,
    DispersionConsistencyError,
    NonConvergenceError,
    NoRealRootsError,
)
from .spectral import Eigenpair, is_irreducible, pf_eigenpair

MU_MIN = 1e-8
MU_MAX = 1e8
GRID_POINTS = 10_000
GRID_SLACK = 1e-6
SPEED_MATCH_TOL = 1e-9
ROOT_MERGE_REL = 1e-5


class SpeedResult(NamedTuple):
    c_star: float
    mu_star: float


class DecayRoots(NamedTuple):
    mu1: float
    mu2: float
    k_c: int


@dataclass(frozen=True)
class DispersionInput:
    """Diffusion rates d (all > 0) and interaction matrix L with positive
    dominant eigenvalue."""

    d: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        L = np.asarray(self.L, dtype=float)
        if d.ndim != 1 or np.any(d <= 0):
            raise ValueError("d must be a positive vector")
        if L.shape != (d.size, d.size):
            raise ValueError("L must be square with the same dimension as d")
        if not is_irreducible(L):
            raise ValueError("L must be essentially nonnegative and irreducible")
        lam0 = pf_eigenpair(L).value
        if lam0 <= 0:
            raise ValueError(f"dominant eigenvalue of L must be positive, got {lam0:g}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "_lam0", lam0)

    @property
    def n(self):
        return self.d.size


def _pencil(inp: DispersionInput, mu: float) -> np.ndarray:
    return (mu * mu) * np.diag(inp.d) + inp.L


def _dense_eigenpair(mat: np.ndarray) -> Eigenpair:
    # the dominant eigenvalue of an essentially nonnegative irreducible
    # matrix is its spectral abscissa, so argmax of the real parts finds it
    w, vecs = np.linalg.eig(mat)
    k = int(np.argmax(w.real))
    v = vecs[:, k].real
    v = v * np.sign(v[int(np.argmax(np.abs(v)))])
    if float(np.min(v)) < -1e-10:
        raise NonConvergenceError("dense fallback produced a sign-mixed eigenvector")
    v = np.maximum(v, 0.0)
    return Eigenpair(float(w[k].real), v / np.linalg.norm(v))


def pencil_eigenpair(inp: DispersionInput, mu: float, transpose: bool = False) -> Eigenpair:
    """Dominant eigenpair of the pencil at mu.

    Power iteration first; a near-reducible pencil (vanishing mutation) has
    an avoided-crossing gap of order eta near the speed minimum, where power
    iteration stalls, so non-convergence falls back to a dense eigensolve.
    """
    mat = _pencil(inp, mu)
    if transpose:
        mat = mat.T
    try:
        return pf_eigenpair(mat, bail_factor=10.0)
    except NonConvergenceError:
        return _dense_eigenpair(mat)


def lambda_of_mu(inp: DispersionInput, mu: float) -> float:
    """Dominant eigenvalue of mu^2 diag(d) + L."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    return pencil_eigenpair(inp, mu).value


def edge_eigenvector(inp: DispersionInput, mu: float) -> np.ndarray:
    """Unit positive eigenvector of mu^2 diag(d) + L (leading-edge direction)."""
    if mu <= 0:
        raise ValueError("mu must be > 0")
    return pencil_eigenpair(inp, mu).vector


def _speed_curve(inp, mu):
    return lambda_of_mu(inp, mu) / mu


def _bracket_minimum(inp):
    # slide a geometric (a, m, b) triple from mu = 1 toward the descending side
    m = 1.0
    gm = _speed_curve(inp, m)
    a, b = m / 2.0, m * 2.0
    ga, gb = _speed_curve(inp, a), _speed_curve(inp, b)
    while not (gm <= ga and gm <= gb):
        if ga < gm:
            b, gb = m, gm
            m, gm = a, ga
            a = m / 2.0
            if a < MU_MIN:
                raise BracketFailureError("no interior minimum above mu = 1e-8")
            ga = _speed_curve(inp, a)
        else:
            a, ga = m, gm
            m, gm = b, gb
            b = m * 2.0
            if b > MU_MAX:
                raise BracketFailureError("no interior minimum below mu = 1e8")
            gb = _speed_curve(inp, b)
    return a, m, b


_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_section(inp, a, b, rel_width=1e-10):
    c = b - _INV_PHI * (b - a)
    d_ = a + _INV_PHI * (b - a)
    gc, gd = _speed_curve(inp, c), _speed_curve(inp, d_)
    while (b - a) > rel_width * max(abs(a), abs(b)):
        if gc < gd:
            b, d_, gd = d_, c, gc
            c = b - _INV_PHI * (b - a)
            gc = _speed_curve(inp, c)
        else:
            a, c, gc = c, d_, gd
            d_ = a + _INV_PHI * (b - a)
            gd = _speed_curve(inp, d_)
    return 0.5 * (a + b)


def _stationarity(inp, mu):
    # g'(mu) has the sign of 2 mu^2 q - lambda, with q the left/right
    # eigenvector average of diag(d) over the pencil (eigenvalue derivative)
    pair = pencil_eigenpair(inp, mu)
    n_hat = pencil_eigenpair(inp, mu, transpose=True).vector
    q = float(n_hat @ (inp.d * pair.vector)) / float(n_hat @ pair.vector)
    return 2.0 * mu * mu * q - pair.value


def _polish_minimum(inp, mu):
    # golden section bottoms out near sqrt(machine eps); refine the minimum
    # as the root of the stationarity condition
    for widen in (1e-4, 1e-3, 1e-2):
        lo, hi = mu * (1.0 - widen), mu * (1.0 + widen)
        flo, fhi = _stationarity(inp, lo), _stationarity(inp, hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if flo < 0.0 < fhi:
            return brentq(lambda x: _stationarity(inp, x), lo, hi, xtol=1e-15, rtol=8.9e-16)
    return mu


def _grid_lambda_pf(inp, mus):
    # cross-check route: batched dense eigenvalues; for an essentially
    # nonnegative irreducible pencil the dominant eigenvalue is the one of
    # largest real part
    pencils = mus[:, None, None] ** 2 * np.diag(inp.d)[None, :, :] + inp.L[None, :, :]
    eig = np.linalg.eigvals(pencils)
    return eig.real.max(axis=1)


def grid_scan_minimum(inp: DispersionInput, points: int = GRID_POINTS) -> tuple[float, float]:
    """(mu, c) attaining the minimum of the speed curve over a log-uniform
    grid spanning the full search window. Independent of the power-iteration
    route; ties resolve to the smaller mu."""
    mus = np.logspace(np.log10(MU_MIN), np.log10(MU_MAX), points)
    g = _grid_lambda_pf(inp, mus) / mus
    k = int(np.argmin(g))
    return float(mus[k]), float(g[k])


def minimal_speed(inp: DispersionInput) -> SpeedResult:
    """Minimal front speed and its minimizing decay rate.

    Geometric bracketing from mu = 1, golden-section refinement to relative
    width 1e-10, then a stationarity polish. The result is cross-validated
    against a 10^4-point log-uniform grid scan; unimodality of the speed
    curve is not assumed, so a disagreement beyond 1e-6 raises instead of
    silently returning a local valley.
    """
    a, m, b = _bracket_minimum(inp)
    mu = _golden_section(inp, a, b)
    mu = _polish_minimum(inp, mu)
    c = _speed_curve(inp, mu)
    _, c_grid = grid_scan_minimum(inp)
    if c > c_grid + GRID_SLACK:
        raise DispersionConsistencyError(
            f"golden-section minimum {c!r} exceeds grid-scan minimum {c_grid!r}"
        )
    return SpeedResult(float(c), float(mu))


def decay_roots(inp: DispersionInput, c: float) -> DecayRoots:
    """Both positive decay rates at speed c, with the tangency flag.

    Speeds below the minimum (beyond tolerance 1e-9) have no real decay
    rate. At the minimum the two roots merge and k_c = 1; above it the two
    distinct roots bracket the minimizer and k_c = 0.
    """
    c_star, mu_star = minimal_speed(inp)
    if c < c_star - SPEED_MATCH_TOL:
        raise NoRealRootsError(f"speed {c:g} is below the minimal speed {c_star:.12g}")
    if abs(c - c_star) <= SPEED_MATCH_TOL:
        return DecayRoots(mu_star, mu_star, 1)

    def h(mu):
        return lambda_of_mu(inp, mu) - c * mu

    # h < 0 at the minimizer, > 0 as mu -> 0 (positive growth) and mu -> inf
    lo = mu_star / 2.0
    while h(lo) <= 0.0:
        lo /= 2.0
        if lo < MU_MIN:
            raise BracketFailureError("lower decay root fell below the search window")
    hi = mu_star * 2.0
    while h(hi) <= 0.0:
        hi *= 2.0
        if hi > MU_MAX:
            raise BracketFailureError("upper decay root exceeded the search window")
    mu1 = brentq(h, lo, mu_star, xtol=1e-15, rtol=8.9e-16)
    mu2 = brentq(h, mu_star, hi, xtol=1e-15, rtol=8.9e-16)
    k_c = 1 if abs(mu2 - mu1) <= ROOT_MERGE_REL * mu_star else 0
    return DecayRoots(float(mu1), float(mu2), k_c)


def predict_edge_profile(inp: DispersionInput, c: float, amplitude: float, xi) -> np.ndarray:
    """Reference edge asymptote A xi^k exp(-mu xi) n_mu at speed c >= c*.

    Uses the smaller decay root. The amplitude is a fitted parameter; no
    closed form for it is claimed. `xi` may be a scalar or an array (then the
    result has one column per xi value).
    """
    if amplitude <= 0:
        raise ValueError("amplitude must be > 0")
    roots = decay_roots(inp, c)
    mu_c = roots.mu1
    n = edge_eigenvector(inp, mu_c)
    xi = np.asarray(xi, dtype=float)
    envelope = amplitude * xi**roots.k_c * np.exp(-mu_c * xi)
    if xi.ndim == 0:
        return float(envelope) * n
    return n[:, None] * envelope[None, :]
