"""Method-of-lines simulator on a 1-D moving window.

Explicit Euler with the 3-point Neumann Laplacian is the default scheme:
at desk scale the dx^2 step restriction is affordable and the explicit
update preserves nonnegativity under the documented dt cap. An IMEX mode
(implicit tridiagonal diffusion, explicit reaction) is available for stiff
sweeps. The hot stepping loop lives in a compiled kernel with a pure-NumPy
fallback selected at import; see `backend()`.
"""

import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import CapExceededError, IntervalOutOfRangeError, StepFailureError
from .kinetics import (
    LotkaVolterra,
    Separated,
    SystemSpec,
    carrying_levels,
    reaction,
    v_star_separated,
)
from .spectral import pf_eigenpair
from . import _stepper_py

if os.environ.get("KPPW_DISABLE_EXT"):
    _kernel = _stepper_py
    _BACKEND = "python"
else:
    try:
        from . import _stepper as _kernel

        _BACKEND = "cython"
    except ImportError:
        _kernel = _stepper_py
        _BACKEND = "python"

SAFETY = 0.4
NEG_REL_FLOOR = -1e-13
MAX_HALVINGS = 6


def backend() -> str:
    """Name of the stepping kernel in use ("cython" or "python")."""
    return _BACKEND


# --- grid and field -----------------------------------------------------------

@dataclass(frozen=True)
class Grid1D:
    x_left: float
    dx: float
    nx: int

    def __post_init__(self):
        if self.dx <= 0:
            raise ValueError("dx must be > 0")
        if self.nx < 16:
            raise ValueError("nx must be >= 16")

    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.nx)

    @property
    def length(self) -> float:
        return self.dx * (self.nx - 1)


@dataclass
class Field:
    """Sampled solution on a grid window, plus bookkeeping for dropped cells.

    `window_offset` counts cells shifted out on the left since t = 0;
    `frozen_back` holds their values at drop time (leftmost first).
    """

    t: float
    grid: Grid1D
    values: np.ndarray  # (N, nx), nonnegative
    window_offset: int = 0
    frozen_back: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    @property
    def n(self):
        return self.values.shape[0]

    def copy(self) -> "Field":
        return Field(
            t=self.t,
            grid=self.grid,
            values=self.values.copy(),
            window_offset=self.window_offset,
            frozen_back=self.frozen_back.copy(),
        )

    def total(self) -> np.ndarray:
        return self.values.sum(axis=0)


# --- initial data ---------------------------------------------------------------

@dataclass(frozen=True)
class FrontStep:
    """Level on the left, zero on the right, linear ramp of the given width
    centered at the interface."""

    level: np.ndarray
    interface: float
    width: float


@dataclass(frozen=True)
class CompactBump:
    """Triangular bump: peak `height` at `center`, support of the given width."""

    center: float
    width: float
    height: np.ndarray


@dataclass(frozen=True)
class Terrace:
    """Piecewise-constant bands ((x_lo, x_hi), level) with linear ramps of
    `width` at the transitions; zero outside all bands. A band flush with a
    grid wall extends to the wall without a ramp."""

    bands: tuple
    width: float


InitialData = FrontStep | CompactBump | Terrace


def _sample_breakpoints(grid, xs, ys):
    x = grid.x()
    out = np.empty((ys.shape[1], grid.nx))
    for i in range(ys.shape[1]):
        out[i] = np.interp(x, xs, ys[:, i])
    return out


def build_initial(grid: Grid1D, init: InitialData) -> Field:
    """Sample the piecewise description (linear-ramp smoothing) at t = 0."""
    x_lo, x_hi = grid.x_left, grid.x_left + grid.length
    if isinstance(init, FrontStep):
        level = np.atleast_1d(np.asarray(init.level, float))
        half = 0.5 * init.width
        xs = np.array([x_lo - 1.0, init.interface - half, init.interface + half, x_hi + 1.0])
        ys = np.stack([level, level, 0.0 * level, 0.0 * level])
        values = _sample_breakpoints(grid, xs, ys)
    elif isinstance(init, CompactBump):
        height = np.atleast_1d(np.asarray(init.height, float))
        half = 0.5 * init.width
        if init.center - half < x_lo or init.center + half > x_hi:
            raise IntervalOutOfRangeError("bump support must lie inside the grid")
        xs = np.array([x_lo - 1.0, init.center - half, init.center, init.center + half, x_hi + 1.0])
        z = 0.0 * height
        ys = np.stack([z, z, height, z, z])
        values = _sample_breakpoints(grid, xs, ys)
    elif isinstance(init, Terrace):
        values = _sample_terrace(grid, init, x_lo, x_hi)
    else:
        raise TypeError(f"unknown initial data {init!r}")
    values = np.ascontiguousarray(np.maximum(values, 0.0))
    return Field(t=0.0, grid=grid, values=values, frozen_back=np.empty((values.shape[0], 0)))


def _sample_terrace(grid, init, x_lo, x_hi):
    bands = [(float(lo), float(hi), np.atleast_1d(np.asarray(lv, float))) for lo, hi, lv in init.bands]
    if not bands:
        raise ValueError("terrace needs at least one band")
    n = bands[0][2].size
    half = 0.5 * init.width
    xs = [x_lo - 1.0]
    ys = [np.zeros(n)]
    prev_hi = None
    prev_level = np.zeros(n)
    for lo, hi, lv in bands:
        if lo >= hi:
            raise ValueError("band interval must have positive length")
        if lo < x_lo - 1e-12 or hi > x_hi + 1e-12:
            raise IntervalOutOfRangeError(
                f"band ({lo:g}, {hi:g}) outside grid [{x_lo:g}, {x_hi:g}]"
            )
        if prev_hi is not None and lo < prev_hi - 1e-12:
            raise ValueError("terrace bands must be ordered and disjoint")
        if prev_hi is not None and lo > prev_hi + 1e-12:
            # gap between bands: ramp down to zero, stay, ramp back up
            xs += [prev_hi - half, prev_hi + half, lo - half, lo + half]
            ys += [prev_level, np.zeros(n), np.zeros(n), lv]
        elif prev_hi is not None:
            # contiguous transition
            xs += [lo - half, lo + half]
            ys += [prev_level, lv]
        elif lo > x_lo + 1e-12:
            # leading edge away from the wall
            xs += [lo - half, lo + half]
            ys += [np.zeros(n), lv]
        else:
            # flush with the left wall: constant from the wall
            ys[0] = lv
        prev_hi, prev_level = hi, lv
    if prev_hi < x_hi - 1e-12:
        xs += [prev_hi - half, prev_hi + half]
        ys += [prev_level, np.zeros(n)]
    xs += [x_hi + 1.0]
    ys += [ys[-1]]
    xs = np.asarray(xs)
    if np.any(np.diff(xs) < 0):
        raise ValueError("ramp width too large for the band layout")
    return _sample_breakpoints(grid, xs, np.stack(ys))


# --- stability and caps -----------------------------------------------------------

def default_u_cap(spec: SystemSpec) -> float:
    """Blow-up tripwire: 10x the largest admissible steady-state scale."""
    if isinstance(spec.law, Separated):
        return 10.0 * float(np.max(v_star_separated(spec).value))
    if spec.mutation is not None:
        return 10.0 * float(np.max(carrying_levels(spec)))
    # generic Lotka-Volterra fallback without a stored decomposition
    lam = pf_eigenpair(spec.L).value
    return 10.0 * lam / float(np.min(np.diag(spec.law.intensity_matrix())))


def reaction_stiffness(spec: SystemSpec, u_cap: float) -> float:
    """Upper bound on the reaction Jacobian norm over admissible states."""
    c_inf = float(np.max(np.abs(spec.law.intensity_matrix()).sum(axis=1)))
    l_inf = float(np.max(np.abs(spec.L).sum(axis=1)))
    return l_inf + 2.0 * c_inf * u_cap


def stable_dt(spec: SystemSpec, grid: Grid1D, u_cap: float | None = None) -> float:
    """Deterministic explicit-Euler step: 0.4 * min(diffusion cap, reaction cap)."""
    if u_cap is None:
        u_cap = default_u_cap(spec)
    dt_diff = grid.dx * grid.dx / (2.0 * float(np.max(spec.d)))
    dt_reac = 1.0 / reaction_stiffness(spec, u_cap)
    return SAFETY * min(dt_diff, dt_reac)


# --- stepping ------------------------------------------------------------------------

def _law_arrays(spec: SystemSpec):
    if isinstance(spec.law, LotkaVolterra):
        return np.ascontiguousarray(spec.law.C), None, None
    return None, np.ascontiguousarray(spec.law.a), np.ascontiguousarray(spec.law.b)


def neumann_laplacian(values: np.ndarray, dx: float) -> np.ndarray:
    """3-point second difference with mirror ghost nodes (zero-flux walls);
    conserves the discrete integral exactly."""
    ul = np.empty_like(values)
    ur = np.empty_like(values)
    ul[:, 1:] = values[:, :-1]
    ul[:, 0] = values[:, 1]
    ur[:, :-1] = values[:, 1:]
    ur[:, -1] = values[:, -2]
    return ((ul - 2.0 * values) + ur) / (dx * dx)


class _StepDriver:
    """Shared state for one run: law arrays plus negativity/cap handling."""

    def __init__(self, spec, dx, u_cap, kernel=None):
        self.dx = dx
        self.u_cap = u_cap
        self.kernel = kernel if kernel is not None else _kernel
        self.C, self.a, self.b = _law_arrays(spec)
        self.d = np.ascontiguousarray(spec.d)
        self.L = np.ascontiguousarray(spec.L)

    def _call(self, values, nsteps, dt, floor):
        return self.kernel.advance(
            values, nsteps, dt, self.dx, self.d, self.L, self.C, self.a, self.b,
            floor, self.u_cap,
        )

    def advance_steps(self, values, nsteps, dt):
        """Advance exactly nsteps * dt. A step rejected for negativity is
        re-taken as 2^k substeps of dt / 2^k (k <= 6 halvings), keeping the
        total time advanced exact."""
        left = nsteps
        while left > 0:
            floor = NEG_REL_FLOOR * max(1.0, float(values.max()))
            status, done = self._call(values, left, dt, floor)
            left -= done
            if status == _stepper_py.STATUS_OK:
                return
            if status == _stepper_py.STATUS_CAP:
                raise CapExceededError(f"field exceeded the cap {self.u_cap:g}")
            self._recover_step(values, dt, floor)
            left -= 1

    def _recover_step(self, values, dt, floor):
        sub, count = dt, 1
        for _ in range(MAX_HALVINGS):
            sub *= 0.5
            count *= 2
            status, _ = self._call(values, count, sub, floor)
            if status == _stepper_py.STATUS_OK:
                return
            if status == _stepper_py.STATUS_CAP:
                raise CapExceededError(f"field exceeded the cap {self.u_cap:g}")
        raise StepFailureError(
            f"update stayed negative after {MAX_HALVINGS} halvings of dt = {dt:g}"
        )


def step(spec: SystemSpec, fld: Field, dt: float, u_cap: float | None = None) -> Field:
    """One explicit-Euler update. On negativity the step is rejected and
    retried at dt/2 (at most 6 halvings, then StepFailureError); the returned
    field is advanced by the dt actually taken."""
    if u_cap is None:
        u_cap = default_u_cap(spec)
    driver = _StepDriver(spec, fld.grid.dx, u_cap)
    floor = NEG_REL_FLOOR * max(1.0, float(fld.values.max()))
    values = fld.values.copy()
    sub = dt
    for _ in range(MAX_HALVINGS + 1):
        status, _ = driver._call(values, 1, sub, floor)
        if status == _stepper_py.STATUS_OK:
            out = fld.copy()
            out.values = values
            out.t = fld.t + sub
            return out
        if status == _stepper_py.STATUS_CAP:
            raise CapExceededError(f"field exceeded the cap {u_cap:g}")
        sub *= 0.5
    raise StepFailureError(f"update stayed negative after {MAX_HALVINGS} halvings of dt = {dt:g}")


# --- IMEX variant --------------------------------------------------------------------

class _ImexKernel:
    """Explicit reaction, implicit tridiagonal diffusion (banded elimination).

    Same advance() contract as the explicit kernels; used by run() in
    "imex" mode for stiff sweeps. The tridiagonal factors assume a fixed dt,
    so halving recovery is unsupported (a rejection aborts)."""

    def __init__(self, spec, grid, dt):
        self._banded = []
        r = dt * spec.d / (grid.dx * grid.dx)
        for ri in r:
            ab = np.zeros((3, grid.nx))
            ab[1, :] = 1.0 + 2.0 * ri
            ab[0, 1:] = -ri
            ab[2, :-1] = -ri
            ab[0, 1] = -2.0 * ri  # mirror ghost at the left wall
            ab[2, -2] = -2.0 * ri  # mirror ghost at the right wall
            self._banded.append(ab)
        self._spec = spec
        self._dt = dt

    def advance(self, u, nsteps, dt, dx, d, L, C, a, b, neg_floor, cap):
        if abs(dt - self._dt) > 1e-12 * self._dt:
            raise StepFailureError("IMEX diffusion factors are built for a fixed dt")
        for k in range(nsteps):
            star = u + dt * reaction(self._spec, u)
            if star.min() < neg_floor:
                return _stepper_py.STATUS_NEGATIVE, k
            np.maximum(star, 0.0, out=star)
            for i, ab in enumerate(self._banded):
                u[i] = solve_banded((1, 1), ab, star[i])
            np.maximum(u, 0.0, out=u)
            if u.max() > cap:
                return _stepper_py.STATUS_CAP, k
        return _stepper_py.STATUS_OK, nsteps


# --- window policy and run -------------------------------------------------------------

@dataclass(frozen=True)
class FollowFront:
    """Shift the window right when the tracked front passes (1 - margin) of
    the domain; dropped cells are recorded as the frozen back state."""

    component: int | str = "total"  # 1-based species index or "total"
    level: float = 0.5
    margin: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.margin <= 0.25:
            raise ValueError("margin must be in (0, 0.25]")


WindowPolicy = FollowFront | None


def _tracked_row(values, component):
    if component == "total":
        return values.sum(axis=0)
    return values[int(component) - 1]


def _front_node(row, level):
    above = np.nonzero(row >= level)[0]
    return int(above[-1]) if above.size else -1


def _apply_window(fld: Field, window: FollowFront):
    nx = fld.grid.nx
    row = _tracked_row(fld.values, window.component)
    idx = _front_node(row, window.level)
    if idx < 0 or idx < (1.0 - window.margin) * (nx - 1):
        return
    target = int((1.0 - 2.0 * window.margin) * (nx - 1))
    shift = idx - target
    if shift <= 0:
        return
    if shift >= nx:
        raise StepFailureError("front outran the moving window")
    fld.frozen_back = np.concatenate([fld.frozen_back, fld.values[:, :shift]], axis=1)
    fld.values[:, : nx - shift] = fld.values[:, shift:].copy()
    fld.values[:, nx - shift :] = 0.0
    fld.window_offset += shift
    fld.grid = replace(fld.grid, x_left=fld.grid.x_left + shift * fld.grid.dx)


WINDOW_CHECK_SPAN = 1.0  # target time units between front checks


def run(
    spec: SystemSpec,
    grid: Grid1D,
    init: InitialData,
    T: float,
    snapshot_every: float,
    window: WindowPolicy = None,
    u_cap: float | None = None,
    method: str = "euler",
) -> list[Field]:
    """Integrate to T, returning snapshots at t = 0, snapshot_every, ... T.

    The step is adjusted (downward from the stability cap) so every snapshot
    time is an exact whole number of steps. Identical inputs produce
    bit-identical snapshot streams.
    """
    if T < 0 or snapshot_every <= 0:
        raise ValueError("need T >= 0 and snapshot_every > 0")
    if u_cap is None:
        u_cap = default_u_cap(spec)
    fld = build_initial(grid, init)
    if float(fld.values.max()) > u_cap:
        raise CapExceededError("initial data exceeds the cap")
    snaps = [fld.copy()]
    if T == 0:
        return snaps

    if method == "euler":
        dt_cap = stable_dt(spec, grid, u_cap)
        kernel = None
    elif method == "imex":
        dt_cap = SAFETY / reaction_stiffness(spec, u_cap)
    else:
        raise ValueError(f"unknown method {method!r}")
    n_per = max(1, int(np.ceil(snapshot_every / dt_cap - 1e-9)))
    dt = snapshot_every / n_per
    if method == "imex":
        kernel = _ImexKernel(spec, grid, dt)
    driver = _StepDriver(spec, grid.dx, u_cap, kernel)
    check_every = max(1, int(round(WINDOW_CHECK_SPAN / dt)))

    n_snaps = int(np.floor(T / snapshot_every + 1e-9))
    for k in range(1, n_snaps + 1):
        left = n_per
        while left > 0:
            chunk = min(left, check_every)
            driver.advance_steps(fld.values, chunk, dt)
            left -= chunk
            if window is not None:
                _apply_window(fld, window)
        fld.t = k * snapshot_every
        snaps.append(fld.copy())
    # partial final segment when T is not a snapshot multiple
    t_last = n_snaps * snapshot_every
    if T - t_last > 1e-9 * max(1.0, T):
        seg = T - t_last
        m = max(1, int(np.ceil(seg / dt_cap - 1e-9)))
        seg_driver = driver
        if method == "imex":
            seg_driver = _StepDriver(spec, grid.dx, u_cap, _ImexKernel(spec, grid, seg / m))
        seg_driver.advance_steps(fld.values, m, seg / m)
        if window is not None:
            _apply_window(fld, window)
        fld.t = T
        snaps.append(fld.copy())
    return snaps
