"""Pure-NumPy fallback for the explicit-Euler stepping kernel.

Operation order and parenthesization mirror the compiled kernel in
`kppw._stepper` exactly (which is built without fused multiply-add), so the
two backends produce bit-identical fields.
"""

import numpy as np

STATUS_OK = 0
STATUS_NEGATIVE = 1
STATUS_CAP = 2


def advance(u, nsteps, dt, dx, d, L, C, a, b, neg_floor, cap):
    """Advance the field `u` (N, nx) in place by up to `nsteps` Euler steps.

    One step applies the 3-point Neumann Laplacian (mirror ghosts) plus the
    reaction, Lotka-Volterra when `C` is given, separated (a, b) otherwise.
    Values in [neg_floor, 0) are clamped to zero.

    Returns (status, steps_done). STATUS_NEGATIVE rolls the offending step
    back, leaving the last accepted state in `u`; STATUS_CAP keeps the
    capped state for error reporting.
    """
    n = u.shape[0]
    alpha = dt * d / (dx * dx)
    ul = np.empty_like(u)
    ur = np.empty_like(u)
    rhs = np.empty_like(u)
    for k in range(nsteps):
        ul[:, 1:] = u[:, :-1]
        ul[:, 0] = u[:, 1]
        ur[:, :-1] = u[:, 1:]
        ur[:, -1] = u[:, -2]
        if C is not None:
            for i in range(n):
                growth = L[i, 0] * u[0]
                comp = C[i, 0] * u[0]
                for l in range(1, n):
                    growth = growth + L[i, l] * u[l]
                    comp = comp + C[i, l] * u[l]
                rhs[i] = growth - comp * u[i]
        else:
            bv = b[0] * u[0]
            for l in range(1, n):
                bv = bv + b[l] * u[l]
            for i in range(n):
                growth = L[i, 0] * u[0]
                for l in range(1, n):
                    growth = growth + L[i, l] * u[l]
                rhs[i] = growth - bv * (a[i] * u[i])
        new = (u + alpha[:, None] * ((ul - 2.0 * u) + ur)) + dt * rhs
        if new.min() < neg_floor:
            return STATUS_NEGATIVE, k
        np.maximum(new, 0.0, out=new)
        if new.max() > cap:
            u[:] = new
            return STATUS_CAP, k
        u[:] = new
    return STATUS_OK, nsteps
