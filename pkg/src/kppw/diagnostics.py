"""Observables extracted from field snapshots.

Front position and spreading speed, edge decay rate and direction, back
state, collinearity against a reference direction, plateau structure, and
bump metrics. All functions are pure; positions are physical coordinates
(the grid's x_left already accounts for window shifts).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EdgeWindowEmptyError, InsufficientSamplesError
from .pde import Field

NEG_INF = float("-inf")

# Edge-fit amplitude window: below the front's nonlinear zone, above the
# explicit-Euler floor noise. The decay statement being asymptotic, this
# window operationalizes "far ahead of the front".
EDGE_LO = 1e-8
EDGE_HI = 1e-4


@dataclass
class FrontTrack:
    times: list[float] = field(default_factory=list)
    positions: list[float] = field(default_factory=list)
    component: int | str = "total"

    def append(self, t, x):
        self.times.append(float(t))
        self.positions.append(float(x))


@dataclass(frozen=True)
class EdgeFit:
    mu_hat: float
    direction_hat: np.ndarray
    r_squared: float
    window: tuple


@dataclass(frozen=True)
class Plateau:
    interval: tuple
    level: np.ndarray
    deviation: float


def _scalar_row(fld: Field, component):
    if component == "total":
        return fld.total()
    return fld.values[int(component) - 1]


def front_position(fld: Field, component="total", level: float = 0.5) -> float:
    """Rightmost x where the chosen scalar crosses `level`, linearly
    interpolated; -inf when the scalar never reaches the level."""
    if level <= 0:
        raise ValueError("level must be > 0")
    row = _scalar_row(fld, component)
    above = np.nonzero(row >= level)[0]
    if above.size == 0:
        return NEG_INF
    j = int(above[-1])
    x = fld.grid.x()
    if j == fld.grid.nx - 1:
        return float(x[-1])
    frac = (row[j] - level) / (row[j] - row[j + 1])
    return float(x[j] + frac * fld.grid.dx)


def track_front(snapshots, component="total", level: float = 0.5) -> FrontTrack:
    track = FrontTrack(component=component)
    for fld in snapshots:
        track.append(fld.t, front_position(fld, component, level))
    return track


def spreading_speed(track: FrontTrack, fit_window: float = 0.5) -> float:
    """Least-squares slope of position vs time over the last `fit_window`
    fraction of samples (at least 10 required)."""
    t = np.asarray(track.times)
    x = np.asarray(track.positions)
    keep = np.isfinite(x)
    t, x = t[keep], x[keep]
    start = int(np.floor(len(t) * (1.0 - fit_window)))
    t, x = t[start:], x[start:]
    if len(t) < 10:
        raise InsufficientSamplesError(f"{len(t)} samples in the fit window, need >= 10")
    slope, _ = np.polyfit(t, x, 1)
    return float(slope)


def edge_decay_fit(fld: Field, thresholds=(EDGE_LO, EDGE_HI)) -> EdgeFit:
    """Exponential decay rate and direction of the leading edge.

    Fits log total mass against x over the nodes ahead of the front whose
    total lies strictly inside `thresholds`; the direction is the
    renormalized mean of u/|u| over the same nodes. A pure two-parameter
    fit of the polynomial prefactor is deliberately not attempted (it is
    ill-conditioned on noisy tails); at the minimal speed the resulting
    small bias of the pure-exponential fit is documented behavior.
    """
    u_lo, u_hi = thresholds
    total = fld.total()
    ahead = np.nonzero(total >= u_hi)[0]
    if ahead.size == 0:
        raise EdgeWindowEmptyError("total mass never reaches the upper threshold")
    j_hi = int(ahead[-1])
    idx = []
    for j in range(j_hi + 1, fld.grid.nx):
        if total[j] <= u_lo:
            break
        if total[j] < u_hi:
            idx.append(j)
    if len(idx) < 4:
        raise EdgeWindowEmptyError(
            "fewer than 4 nodes inside the edge window; enlarge the domain"
        )
    idx = np.asarray(idx)
    x = fld.grid.x()[idx]
    y = np.log(total[idx])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    cols = fld.values[:, idx]
    norms = np.linalg.norm(cols, axis=0)
    direction = (cols / norms).mean(axis=1)
    direction = direction / np.linalg.norm(direction)
    return EdgeFit(
        mu_hat=float(-slope),
        direction_hat=direction,
        r_squared=float(min(max(r2, 0.0), 1.0)),
        window=(u_lo, u_hi),
    )


def back_state(fld: Field, fraction: float = 0.1) -> np.ndarray:
    """Componentwise mean over the leftmost `fraction` of nodes, counting
    window-frozen cells ahead of the live window's own columns."""
    if not 0.0 < fraction <= 0.5:
        raise ValueError("fraction must be in (0, 0.5]")
    if fld.frozen_back.size:
        combined = np.concatenate([fld.frozen_back, fld.values], axis=1)
    else:
        combined = fld.values
    count = max(1, int(round(combined.shape[1] * fraction)))
    return combined[:, :count].mean(axis=1)


def collinearity_error(fld: Field, direction, support_threshold: float = 1e-6) -> float:
    """Largest sine of the angle between u(x) and the reference direction
    over nodes whose total mass exceeds the threshold (0 on empty support).
    Invariant under positive scaling of the field."""
    n = np.asarray(direction, float)
    n = n / np.linalg.norm(n)
    mask = fld.total() > support_threshold
    if not mask.any():
        return 0.0
    cols = fld.values[:, mask]
    norms = np.linalg.norm(cols, axis=0)
    proj = n @ cols
    trans = cols - n[:, None] * proj[None, :]
    return float(np.max(np.linalg.norm(trans, axis=0) / norms))


def plateau_detect(
    fld: Field, tolerance: float | None = None, min_width: int = 20
) -> list[Plateau]:
    """Greedy maximal runs of nodes whose componentwise range stays within
    the tolerance (default 1e-2 * |level|_inf + 1e-4, evaluated on the
    running level). Runs shorter than `min_width` nodes are discarded."""
    values = fld.values
    x = fld.grid.x()
    nx = fld.grid.nx
    plateaus = []
    start = 0
    while start < nx:
        lo = values[:, start].copy()
        hi = values[:, start].copy()
        mean = values[:, start].copy()
        end = start
        for j in range(start + 1, nx):
            cand_lo = np.minimum(lo, values[:, j])
            cand_hi = np.maximum(hi, values[:, j])
            cand_mean = (mean * (j - start) + values[:, j]) / (j - start + 1)
            tol = tolerance if tolerance is not None else 1e-2 * float(np.max(np.abs(cand_mean))) + 1e-4
            if float(np.max(cand_hi - cand_lo)) > tol:
                break
            lo, hi, mean, end = cand_lo, cand_hi, cand_mean, j
        if end - start + 1 >= min_width:
            plateaus.append(
                Plateau(
                    interval=(float(x[start]), float(x[end])),
                    level=mean,
                    deviation=float(np.max(hi - lo)),
                )
            )
            start = end + 1
        else:
            start += 1
    return plateaus


def bump_metrics(
    fld: Field, component: int, half_fraction: float = 0.5, baseline: float = 0.0
) -> tuple[float, float]:
    """(amplitude, length) of one component's bump.

    Amplitude is the raw maximum of the component. Length is the measure of
    the set where the component exceeds `half_fraction` of the amplitude,
    interpolation-corrected at run boundaries. A nonzero `baseline`
    (typically the component's back-plateau level) is subtracted before the
    half-level rule so an excursion riding on a plateau is measured rather
    than the plateau itself.
    """
    u = fld.values[int(component) - 1]
    amplitude = float(u.max())
    w = u - baseline
    if baseline:
        np.maximum(w, 0.0, out=w)
    peak = float(w.max())
    if peak <= 0.0:
        return amplitude, 0.0
    thr = half_fraction * peak
    dx = fld.grid.dx
    above = w >= thr
    if not above.any():
        return amplitude, 0.0
    length = 0.0
    j = 0
    nx = w.size
    while j < nx:
        if not above[j]:
            j += 1
            continue
        k = j
        while k + 1 < nx and above[k + 1]:
            k += 1
        length += (k - j) * dx
        if j > 0 and w[j - 1] != w[j]:
            length += dx * (w[j] - thr) / (w[j] - w[j - 1])
        if k < nx - 1 and w[k + 1] != w[k]:
            length += dx * (w[k] - thr) / (w[k] - w[k + 1])
        j = k + 1
    return amplitude, float(length)


@dataclass
class DiagnosticsReport:
    """Flat bundle of the measured observables for one run."""

    front: FrontTrack | None = None
    measured_speed: float | None = None
    edge: EdgeFit | None = None
    back: np.ndarray | None = None
    collinearity: float | None = None
    plateaus: list[Plateau] = field(default_factory=list)
    bump_amplitude: float | None = None
    bump_length: float | None = None
