"""Built-in systems and the config-tree loader.

The vertical rolling disk lives on ``q = (theta, x, y, phi)`` with metric
``diag(I, m, m, J)`` and rolling constraints
``v_x - R cos(theta) v_phi = 0``, ``v_y - R sin(theta) v_phi = 0``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .constraints import ConstraintSet, FrictionSpec
from .errors import InvalidParams, SchemaError
from .geometry import BundleMap, MetricField, PotentialField

DISK_KIND = "vertical-disk"
MODELS = ("full", "zeroth", "first")


@dataclass(frozen=True)
class SystemDef:
    name: str
    dim: int
    metric: MetricField
    potential: PotentialField
    constraints: ConstraintSet
    friction: FrictionSpec
    oracle: Any = field(default=None, compare=False)
    analytic: bool = False

    @property
    def epsilon(self) -> float:
        return self.friction.epsilon

    def with_epsilon(self, epsilon: float) -> "SystemDef":
        oracle = self.oracle.with_epsilon(epsilon) if self.oracle is not None else None
        return dataclasses.replace(
            self, friction=dataclasses.replace(self.friction, epsilon=epsilon), oracle=oracle
        )


@dataclass(frozen=True)
class DiskParams:
    m: float = 1.0
    I: float = 1.0
    J: float = 0.5
    R: float = 1.0
    mu: float = 1.0
    epsilon: float = 0.01

    def __post_init__(self):
        for name in ("m", "I", "J", "R", "mu", "epsilon"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParams(f"{name} must be strictly positive, got {value}")

    @property
    def inertia_ratio(self) -> float:
        """``m R^2 / (J + m R^2)``, always in (0, 1)."""
        return self.m * self.R**2 / (self.J + self.m * self.R**2)

    @property
    def gamma(self) -> float:
        return self.m * self.R**2 + 2 * self.J


class DiskOracle:
    """Closed-form disk quantities, written out independently of the generic pipeline.

    ``h2`` and ``first_accel`` carry the sign confirmed by direct simulation of
    the stiff system; ``h2_printed`` and ``first_accel_printed`` keep the
    opposite-sign closed forms as they are usually quoted, for comparison only.
    """

    def __init__(self, p: DiskParams):
        self.p = p

    def with_epsilon(self, epsilon: float) -> "DiskOracle":
        return DiskOracle(dataclasses.replace(self.p, epsilon=epsilon))

    # matrices -----------------------------------------------------------
    def metric(self) -> np.ndarray:
        p = self.p
        return np.diag([p.I, p.m, p.m, p.J])

    def A(self, theta: float) -> np.ndarray:
        R = self.p.R
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[0.0, 1.0, 0.0, -R * c], [0.0, 0.0, 1.0, -R * s]])

    def P(self, theta: float) -> np.ndarray:
        m, J, R = self.p.m, self.p.J, self.p.R
        Ir = self.p.inertia_ratio
        c, s = np.cos(theta), np.sin(theta)
        s2 = np.sin(2 * theta)
        return Ir * np.array([
            [1.0 / Ir, 0.0, 0.0, 0.0],
            [0.0, c * c, 0.5 * s2, J / (m * R) * c],
            [0.0, 0.5 * s2, s * s, J / (m * R) * s],
            [0.0, c / R, s / R, J / (m * R**2)],
        ])

    def P_perp(self, theta: float) -> np.ndarray:
        m, J, R = self.p.m, self.p.J, self.p.R
        Ir = self.p.inertia_ratio
        c, s = np.cos(theta), np.sin(theta)
        s2 = np.sin(2 * theta)
        mR2 = m * R**2
        return Ir * np.array([
            [0.0, 0.0, 0.0, 0.0],
            [0.0, (J + mR2 * s * s) / mR2, -0.5 * s2, -J / (m * R) * c],
            [0.0, -0.5 * s2, (J + mR2 * c * c) / mR2, -J / (m * R) * s],
            [0.0, -c / R, -s / R, 1.0],
        ])

    def FR_sharp(self, theta: float) -> np.ndarray:
        m, J, R, mu = self.p.m, self.p.J, self.p.R, self.p.mu
        c, s = np.cos(theta), np.sin(theta)
        return np.array([
            [0.0, 0.0, 0.0, 0.0],
            [0.0, mu / m, 0.0, -mu * R / m * c],
            [0.0, 0.0, mu / m, -mu * R / m * s],
            [0.0, -mu * R / J * c, -mu * R / J * s, mu * R**2 / J],
        ])

    def D_frame(self, theta: float) -> np.ndarray:
        R = self.p.R
        return np.array([[1.0, 0.0], [0.0, R * np.cos(theta)], [0.0, R * np.sin(theta)], [0.0, 1.0]])

    def Dperp_frame(self, theta: float) -> np.ndarray:
        m, J, R = self.p.m, self.p.J, self.p.R
        return np.array([
            [0.0, 0.0],
            [1.0 / m, 0.0],
            [0.0, 1.0 / m],
            [-R / J * np.cos(theta), -R / J * np.sin(theta)],
        ])

    # velocities ---------------------------------------------------------
    def vD(self, theta: float, v_theta: float, v_phi: float) -> np.ndarray:
        R = self.p.R
        return np.array([v_theta, R * np.cos(theta) * v_phi, R * np.sin(theta) * v_phi, v_phi])

    def h1(self, theta, v_theta, v_phi) -> np.ndarray:
        k = self.p.m * self.p.R / self.p.mu * v_theta * v_phi
        return np.array([0.0, k * np.sin(theta), -k * np.cos(theta), 0.0])

    def _h2_coeff(self) -> float:
        m, J, R, mu = self.p.m, self.p.J, self.p.R, self.p.mu
        return m * m * R * J * J / (mu * mu * (J + m * R**2) ** 2)

    def h2_printed(self, theta, v_theta, v_phi) -> np.ndarray:
        k = self._h2_coeff() * v_theta**2 * v_phi
        mRJ = self.p.m * self.p.R / self.p.J
        return k * np.array([0.0, np.cos(theta), np.sin(theta), -mRJ])

    def h2(self, theta, v_theta, v_phi) -> np.ndarray:
        return -self.h2_printed(theta, v_theta, v_phi)

    def slip(self, theta, v_theta, v_phi, order: int) -> np.ndarray:
        eps = self.p.epsilon
        out = np.zeros(4)
        if order >= 1:
            out = out + eps * self.h1(theta, v_theta, v_phi)
        if order >= 2:
            out = out + eps**2 * self.h2(theta, v_theta, v_phi)
        return out

    # accelerations ------------------------------------------------------
    def full_accel(self, theta, v) -> np.ndarray:
        return -self.FR_sharp(theta) @ np.asarray(v, dtype=float) / self.p.epsilon

    def zeroth_accel(self, theta, v_theta, v_phi) -> np.ndarray:
        R = self.p.R
        k = R * v_theta * v_phi
        return np.array([0.0, -k * np.sin(theta), k * np.cos(theta), 0.0])

    def _first_coeff(self) -> float:
        m, J, R, mu = self.p.m, self.p.J, self.p.R, self.p.mu
        return m * R * J / (mu * (J + m * R**2))

    def _first_correction_printed(self, theta, v_theta, v_phi) -> np.ndarray:
        k = self.p.epsilon * self._first_coeff() * v_theta**2 * v_phi
        mRJ = self.p.m * self.p.R / self.p.J
        return k * np.array([0.0, -np.cos(theta), -np.sin(theta), mRJ])

    def first_accel_printed(self, theta, v_theta, v_phi) -> np.ndarray:
        return self.zeroth_accel(theta, v_theta, v_phi) + self._first_correction_printed(theta, v_theta, v_phi)

    def first_accel(self, theta, v_theta, v_phi) -> np.ndarray:
        return self.zeroth_accel(theta, v_theta, v_phi) - self._first_correction_printed(theta, v_theta, v_phi)

    def first_qdot(self, theta, v_theta, v_phi) -> np.ndarray:
        return self.vD(theta, v_theta, v_phi) + self.p.epsilon * self.h1(theta, v_theta, v_phi)

    # bundle maps with analytic partials ---------------------------------
    # These read (w_theta, w_phi) straight off the ambient velocity.
    def h1_map(self) -> BundleMap:
        p = self.p

        def ev(q, w):
            return self.h1(q[0], w[0], w[3])

        def partials(q, w):
            th, wt, wp = q[0], w[0], w[3]
            c, s = np.cos(th), np.sin(th)
            k = p.m * p.R / p.mu
            dq = np.zeros((4, 4))
            dq[:, 0] = k * wt * wp * np.array([0.0, c, s, 0.0])
            dw = np.zeros((4, 4))
            dw[:, 0] = k * wp * np.array([0.0, s, -c, 0.0])
            dw[:, 3] = k * wt * np.array([0.0, s, -c, 0.0])
            return dq, dw

        return BundleMap(ev, partials)

    def h2_map(self) -> BundleMap:
        p = self.p

        def ev(q, w):
            return self.h2(q[0], w[0], w[3])

        def partials(q, w):
            th, wt, wp = q[0], w[0], w[3]
            c, s = np.cos(th), np.sin(th)
            K = -self._h2_coeff()
            base = np.array([0.0, c, s, -p.m * p.R / p.J])
            dbase = np.array([0.0, -s, c, 0.0])
            dq = np.zeros((4, 4))
            dq[:, 0] = K * wt**2 * wp * dbase
            dw = np.zeros((4, 4))
            dw[:, 0] = K * 2 * wt * wp * base
            dw[:, 3] = K * wt**2 * base
            return dq, dw

        return BundleMap(ev, partials)

    def slip_map(self, order: int) -> BundleMap:
        eps = self.p.epsilon
        maps = [(eps, self.h1_map()), (eps**2, self.h2_map())][:order]

        def ev(q, w):
            out = np.zeros(4)
            for c, h in maps:
                out = out + c * h.value(q, w)
            return out

        def partials(q, w):
            dq = np.zeros((4, 4))
            dw = np.zeros((4, 4))
            for c, h in maps:
                a, b = h.analytic_partials(q, w)
                dq = dq + c * a
                dw = dw + c * b
            return dq, dw

        return BundleMap(ev, partials)


def disk_system(p: DiskParams, analytic: bool = True) -> SystemDef:
    """Vertical rolling disk; ``analytic=False`` drops the closed-form partials."""
    m, I, J, R, mu = p.m, p.I, p.J, p.R, p.mu
    G = np.diag([I, m, m, J])

    def A_at(q):
        th = q[0]
        return np.array([[0.0, 1.0, 0.0, -R * np.cos(th)], [0.0, 0.0, 1.0, -R * np.sin(th)]])

    def A_partials(q):
        th = q[0]
        dA = np.zeros((4, 2, 4))
        dA[0, 0, 3] = R * np.sin(th)
        dA[0, 1, 3] = -R * np.cos(th)
        return dA

    def D_frame(q):
        th = q[0]
        return np.array([[1.0, 0.0], [0.0, R * np.cos(th)], [0.0, R * np.sin(th)], [0.0, 1.0]])

    metric = MetricField(
        4, lambda q: G, (lambda q: np.zeros((4, 4, 4))) if analytic else None
    )
    constraints = ConstraintSet(2, A_at, D_frame, A_partials if analytic else None)
    friction = FrictionSpec(lambda q: mu * np.eye(2), p.epsilon)
    potential = PotentialField.zero(4)
    return SystemDef(DISK_KIND, 4, metric, potential, constraints, friction, DiskOracle(p), analytic)


# config tree ---------------------------------------------------------------

def _get(tree: Mapping, path: str, default=...):
    node = tree
    for part in path.split("."):
        if not isinstance(node, Mapping) or part not in node:
            if default is ...:
                raise SchemaError(path)
            return default
        node = node[part]
    return node


def _number(tree, path, default=...) -> float:
    value = _get(tree, path, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"{path}: expected a number, got {value!r}")
    return float(value)


def disk_params_from_config(tree: Mapping) -> DiskParams:
    params = _get(tree, "system.params")
    if not isinstance(params, Mapping):
        raise SchemaError("system.params")
    known = {"m", "I", "J", "R", "mu"}
    for key in params:
        if key not in known:
            raise SchemaError(f"system.params.{key}", f"unknown parameter system.params.{key}")
    values = {k: _number(tree, f"system.params.{k}") for k in sorted(known)}
    eps = _number(tree, "sim.epsilon", 0.01)
    return DiskParams(epsilon=eps, **values)


def load_system(tree: Mapping, analytic: bool = True) -> SystemDef:
    """Build a :class:`SystemDef` from a parsed config tree."""
    if not isinstance(tree, Mapping):
        raise SchemaError("system")
    kind = _get(tree, "system.kind")
    if kind != DISK_KIND:
        raise SchemaError("system.kind", f"system.kind: unknown kind {kind!r}")
    return disk_system(disk_params_from_config(tree), analytic=analytic)


def disk_state_from_config(tree: Mapping, system: Optional[SystemDef] = None):
    """Initial configuration and velocity from the ``initial`` block.

    The velocity is ``v^D + slip`` with the slip taken to ``initial.slip_order``.
    """
    from .slow_manifold import slip  # noqa: PLC0415  (avoid import cycle)

    system = system or load_system(tree)
    theta = _number(tree, "initial.theta", 0.0)
    q = np.array([
        theta,
        _number(tree, "initial.x", 0.0),
        _number(tree, "initial.y", 0.0),
        _number(tree, "initial.phi", 0.0),
    ])
    v_theta = _number(tree, "initial.v_theta", 1.0)
    v_phi = _number(tree, "initial.v_phi", 1.0)
    order = _get(tree, "initial.slip_order", 2)
    if order not in (0, 1, 2):
        raise SchemaError("initial.slip_order", f"initial.slip_order must be 0, 1 or 2, got {order!r}")
    R = system.oracle.p.R if system.oracle is not None else 1.0
    vD = np.array([v_theta, R * np.cos(theta) * v_phi, R * np.sin(theta) * v_phi, v_phi])
    v = vD + slip(system, q, vD, order)
    return q, v
