"""Slip sections of the slow manifold and their residual checks.

The slow manifold is the graph of a section ``v^D -> v^D + h_eps(v^D)`` with
``h_eps = eps h1 + eps^2 h2 + ...`` taking values in the complement of the
distribution. Ambient velocities are projected onto the distribution first,
so every evaluator here is a total function ``(q, w) -> slip``.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .constraints import PointData, point_data
from .errors import UnsupportedOrder
from .geometry import BundleMap, horizontal_cov_deriv

MAX_ORDER = 2


def h1(system, q, w, pd: Optional[PointData] = None) -> np.ndarray:
    """First-order slip ``Q [(nabla_vD P_perp)(vD) - P_perp (dV)^#]``."""
    pd = pd or point_data(system, q)
    vD = pd.P @ np.asarray(w, dtype=float)
    u = pd.cov_P_perp(vD) @ vD - pd.P_perp @ pd.grad_sharp
    return pd.pp.Q @ u


def h1_map(system) -> BundleMap:
    return BundleMap(lambda q, w: h1(system, q, w), fd_step=system.metric.fd_step)


def default_h1_section(system) -> BundleMap:
    """Closed-form first-order slip when the system carries analytic partials, else the generic one."""
    oracle = getattr(system, "oracle", None)
    if getattr(system, "analytic", False) and oracle is not None and hasattr(oracle, "h1_map"):
        return oracle.h1_map()
    return h1_map(system)


def h2(system, q, w, pd: Optional[PointData] = None, h1_section: Optional[BundleMap] = None) -> np.ndarray:
    """Second-order slip.

    Derivatives of the first-order section come from ``h1_section``'s partials,
    by default :func:`default_h1_section`.
    """
    pd = pd or point_data(system, q)
    q = pd.q
    hm = h1_section or default_h1_section(system)
    vD = pd.P @ np.asarray(w, dtype=float)
    s1 = hm.value(q, vD)
    DV = hm.dw(q, vD)
    reaction = pd.cov_P_perp(s1) @ vD + pd.cov_P_perp(vD) @ s1
    vertical = DV @ (pd.cov_P(vD) @ vD) - DV @ (pd.P @ pd.grad_sharp)
    horizontal = horizontal_cov_deriv(hm, vD, q, vD, pd.gamma)
    return pd.pp.Q @ (reaction - vertical - horizontal)


def h2_map(system) -> BundleMap:
    return BundleMap(lambda q, w: h2(system, q, w), fd_step=system.metric.fd_step)


def slip(system, q, vD, order: int, epsilon: Optional[float] = None,
         h1_section: Optional[BundleMap] = None) -> np.ndarray:
    """Truncated slip ``0``, ``eps h1`` or ``eps h1 + eps^2 h2``."""
    if order not in range(MAX_ORDER + 1):
        raise UnsupportedOrder(f"slip order must be 0..{MAX_ORDER}, got {order}")
    q = np.asarray(q, dtype=float)
    if order == 0:
        return np.zeros(q.size)
    eps = system.epsilon if epsilon is None else epsilon
    pd = point_data(system, q)
    out = eps * h1(system, q, vD, pd)
    if order == 2:
        out = out + eps**2 * h2(system, q, vD, pd, h1_section)
    return out


class SlipSection:
    """Order-``order`` truncation of the slip section as a callable bundle map."""

    def __init__(self, system, order: int, epsilon: Optional[float] = None):
        if order not in range(MAX_ORDER + 1):
            raise UnsupportedOrder(f"slip order must be 0..{MAX_ORDER}, got {order}")
        self.system = system
        self.order = order
        self.epsilon = system.epsilon if epsilon is None else epsilon

    def __call__(self, q, w) -> np.ndarray:
        return slip(self.system, q, w, self.order, self.epsilon)

    def as_bundle_map(self) -> BundleMap:
        return BundleMap(self, fd_step=self.system.metric.fd_step)


def generating_residual(system, q, vD, hcand: BundleMap, epsilon: Optional[float] = None) -> np.ndarray:
    """Right-hand side of the covariant generating equation minus ``hcand(q, vD)``.

    All cross terms are kept: with ``X = vD + h`` the bracketed sums collapse to
    ``(nabla_X P_perp)(X)``, ``(nabla_X P)(X)`` and ``nabla^H_X h(vD)``.
    """
    pd = point_data(system, q)
    eps = system.epsilon if epsilon is None else epsilon
    vD = pd.P @ np.asarray(vD, dtype=float)
    h = hcand.value(pd.q, vD)
    X = vD + h
    DV = hcand.dw(pd.q, vD)
    reaction = pd.cov_P_perp(X) @ X - pd.P_perp @ pd.grad_sharp
    vertical = DV @ (pd.cov_P(X) @ X - pd.P @ pd.grad_sharp)
    horizontal = horizontal_cov_deriv(hcand, X, pd.q, vD, pd.gamma)
    rhs = eps * (pd.pp.Q @ (reaction - vertical - horizontal))
    return rhs - h


def invariance_residual(system, q, v, order: int) -> np.ndarray:
    """``P_perp(v) - slip(P v)``; zero exactly on the truncated manifold model."""
    pd = point_data(system, q)
    v = np.asarray(v, dtype=float)
    return pd.P_perp @ v - slip(system, q, pd.P @ v, order)
