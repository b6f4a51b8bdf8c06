"""Pure-Python disk kernels; same API as the compiled ``_kernels`` module.

State layout: ``y = (theta, x, y, phi, v_theta, v_x, v_y, v_phi)``.
Models: 0 full (stiff friction), 1 zeroth order, 2 first order.
"""
import math

import numpy as np

FULL, ZEROTH, FIRST = 0, 1, 2


def _rhs(model, y, m, J, R, mu, eps, out):
    th, vt, vx, vy, vp = y[0], y[4], y[5], y[6], y[7]
    c = math.cos(th)
    s = math.sin(th)
    if model == FULL:
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
    # phi-component of P v
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
    if model == FIRST:
        a = eps * (m * R / mu) * vt * wp
        out[1] += a * s
        out[2] -= a * c
        b = eps * (m * R * J / (mu * (J + mR2))) * vt * vt * wp
        out[5] += b * c
        out[6] += b * s
        out[7] -= b * (m * R / J)


def disk_rhs(model, y, params):
    """Time derivative of the packed disk state. ``params = (m, I, J, R, mu, eps)``."""
    m, _I, J, R, mu, eps = params
    out = [0.0] * 8
    _rhs(int(model), [float(a) for a in y], m, J, R, mu, eps, out)
    return np.array(out)


def disk_rk4(model, y0, params, dt, nsteps, record_every):
    """Classical RK4 with fixed step; rows ``(t, y...)`` every ``record_every`` steps."""
    m, _I, J, R, mu, eps = params
    model = int(model)
    y = [float(a) for a in y0]
    k1 = [0.0] * 8
    k2 = [0.0] * 8
    k3 = [0.0] * 8
    k4 = [0.0] * 8
    nrec = nsteps // record_every + 1
    rows = np.empty((nrec, 9))
    rows[0, 0] = 0.0
    rows[0, 1:] = y
    r = 1
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for step in range(1, nsteps + 1):
        _rhs(model, y, m, J, R, mu, eps, k1)
        _rhs(model, [y[i] + h2 * k1[i] for i in range(8)], m, J, R, mu, eps, k2)
        _rhs(model, [y[i] + h2 * k2[i] for i in range(8)], m, J, R, mu, eps, k3)
        _rhs(model, [y[i] + dt * k3[i] for i in range(8)], m, J, R, mu, eps, k4)
        y = [y[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(8)]
        if not all(math.isfinite(a) for a in y):
            raise FloatingPointError(f"non-finite state at step {step}")
        if step % record_every == 0:
            rows[r, 0] = step * dt
            rows[r, 1:] = y
            r += 1
    return rows
