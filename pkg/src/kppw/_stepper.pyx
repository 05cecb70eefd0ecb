# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled explicit-Euler stepping kernel.

Fuses the 3-point Neumann Laplacian with the reaction into one pass per
step. Arithmetic order matches kppw._stepper_py and the extension is built
with -ffp-contract=off, keeping results bit-identical to the fallback. The
hot loop runs without the GIL, so independent runs parallelize on threads.
"""

from libc.string cimport memcpy

import numpy as np

STATUS_OK = 0
STATUS_NEGATIVE = 1
STATUS_CAP = 2

cdef int _OK = 0
cdef int _NEGATIVE = 1
cdef int _CAP = 2


def advance(double[:, ::1] u, Py_ssize_t nsteps, double dt, double dx,
            double[::1] d, double[:, ::1] L, object C_obj, object a_obj,
            object b_obj, double neg_floor, double cap):
    """Same contract as kppw._stepper_py.advance."""
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t nx = u.shape[1]
    work_arr = np.empty((n, nx), dtype=np.float64)
    alpha_arr = np.asarray(dt * np.asarray(d) / (dx * dx), dtype=np.float64)

    cdef double[:, ::1] work = work_arr
    cdef double[::1] alpha = alpha_arr
    cdef bint lv = C_obj is not None
    cdef double[:, ::1] Cm = C_obj if lv else L
    cdef double[::1] av = a_obj if not lv else d
    cdef double[::1] bv_coef = b_obj if not lv else d

    cdef double *base_u = &u[0, 0]
    cdef double *base_w = &work[0, 0]
    cdef double *cur = base_u
    cdef double *nxt = base_w
    cdef double *tmp

    cdef Py_ssize_t k, i, j, l, jl, jr, idx
    cdef double growth, comp, bv, val, mn, mx
    cdef int status = _OK
    cdef Py_ssize_t done = nsteps

    with nogil:
        for k in range(nsteps):
            for j in range(nx):
                jl = j - 1 if j > 0 else 1
                jr = j + 1 if j < nx - 1 else nx - 2
                if lv:
                    for i in range(n):
                        growth = L[i, 0] * cur[j]
                        comp = Cm[i, 0] * cur[j]
                        for l in range(1, n):
                            growth = growth + L[i, l] * cur[l * nx + j]
                            comp = comp + Cm[i, l] * cur[l * nx + j]
                        val = growth - comp * cur[i * nx + j]
                        nxt[i * nx + j] = (cur[i * nx + j]
                                           + alpha[i] * ((cur[i * nx + jl]
                                                          - 2.0 * cur[i * nx + j])
                                                         + cur[i * nx + jr])) + dt * val
                else:
                    bv = bv_coef[0] * cur[j]
                    for l in range(1, n):
                        bv = bv + bv_coef[l] * cur[l * nx + j]
                    for i in range(n):
                        growth = L[i, 0] * cur[j]
                        for l in range(1, n):
                            growth = growth + L[i, l] * cur[l * nx + j]
                        val = growth - bv * (av[i] * cur[i * nx + j])
                        nxt[i * nx + j] = (cur[i * nx + j]
                                           + alpha[i] * ((cur[i * nx + jl]
                                                          - 2.0 * cur[i * nx + j])
                                                         + cur[i * nx + jr])) + dt * val
            mn = nxt[0]
            for idx in range(1, n * nx):
                if nxt[idx] < mn:
                    mn = nxt[idx]
            if mn < neg_floor:
                status = _NEGATIVE
                done = k
                break
            mx = nxt[0]
            for idx in range(n * nx):
                if nxt[idx] < 0.0:
                    nxt[idx] = 0.0
                if nxt[idx] > mx:
                    mx = nxt[idx]
            if mx > cap:
                status = _CAP
                done = k
                tmp = cur
                cur = nxt
                nxt = tmp
                break
            tmp = cur
            cur = nxt
            nxt = tmp
        if cur != base_u:
            memcpy(base_u, cur, n * nx * sizeof(double))
    return status, done
