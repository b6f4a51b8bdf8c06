# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled disk kernels; mirrors ``_kernels_py`` operation for operation."""
from libc.math cimport cos, sin, isfinite

import numpy as np

cdef enum:
    N = 8

FULL, ZEROTH, FIRST = 0, 1, 2


cdef void _rhs(int model, double* y, double m, double J, double R, double mu,
               double eps, double* out) noexcept nogil:
    cdef double th = y[0], vt = y[4], vx = y[5], vy = y[6], vp = y[7]
    cdef double c = cos(th)
    cdef double s = sin(th)
    cdef double mR2, ratio, wp, k, a, b
    if model == 0:
        out[0] = vt
        out[1] = vx
        out[2] = vy
        out[3] = vp
        out[4] = 0.0
        out[5] = -(mu / m) * (vx - R * c * vp) / eps
        out[6] = -(mu / m) * (vy - R * s * vp) / eps
        out[7] = (mu * R / J) * (c * vx + s * vy - R * vp) / eps
        return
    mR2 = m * R * R
    ratio = mR2 / (J + mR2)
    wp = ratio * (c * vx / R + s * vy / R + J * vp / mR2)
    k = R * vt * wp
    out[0] = vt
    out[1] = R * c * wp
    out[2] = R * s * wp
    out[3] = wp
    out[4] = 0.0
    out[5] = -k * s
    out[6] = k * c
    out[7] = 0.0
    if model == 2:
        a = eps * (m * R / mu) * vt * wp
        out[1] += a * s
        out[2] -= a * c
        b = eps * (m * R * J / (mu * (J + mR2))) * vt * vt * wp
        out[5] += b * c
        out[6] += b * s
        out[7] -= b * (m * R / J)


def disk_rhs(int model, y, params):
    cdef double m, I, J, R, mu, eps
    m, I, J, R, mu, eps = params
    cdef double yy[N]
    cdef double out[N]
    cdef int i
    for i in range(N):
        yy[i] = y[i]
    _rhs(model, yy, m, J, R, mu, eps, out)
    return np.array([out[i] for i in range(N)])


def disk_rk4(int model, y0, params, double dt, long nsteps, long record_every):
    cdef double m, I, J, R, mu, eps
    m, I, J, R, mu, eps = params
    cdef double y[N]
    cdef double tmp[N]
    cdef double k1[N]
    cdef double k2[N]
    cdef double k3[N]
    cdef double k4[N]
    cdef int i
    cdef long step, r = 1
    cdef long nrec = nsteps // record_every + 1
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    rows_arr = np.empty((nrec, N + 1))
    cdef double[:, ::1] rows = rows_arr
    for i in range(N):
        y[i] = y0[i]
        rows[0, i + 1] = y[i]
    rows[0, 0] = 0.0
    for step in range(1, nsteps + 1):
        _rhs(model, y, m, J, R, mu, eps, k1)
        for i in range(N):
            tmp[i] = y[i] + h2 * k1[i]
        _rhs(model, tmp, m, J, R, mu, eps, k2)
        for i in range(N):
            tmp[i] = y[i] + h2 * k2[i]
        _rhs(model, tmp, m, J, R, mu, eps, k3)
        for i in range(N):
            tmp[i] = y[i] + dt * k3[i]
        _rhs(model, tmp, m, J, R, mu, eps, k4)
        for i in range(N):
            y[i] = y[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not isfinite(y[i]):
                raise FloatingPointError(f"non-finite state at step {step}")
        if step % record_every == 0:
            rows[r, 0] = step * dt
            for i in range(N):
                rows[r, i + 1] = y[i]
            r += 1
    return rows_arr
