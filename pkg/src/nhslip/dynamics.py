"""Right-hand sides for the full, zeroth-order and first-order models, RK4 integration
and energy diagnostics.

The full model is the singularly perturbed system with viscous friction
``-(1/eps) FR^# v``. The zeroth-order model is the ideal nonholonomic system and
the first-order model adds the ``O(eps)`` slip correction. In both reduced models
the state velocity may be ambient; ``v^D = P v`` is recomputed at every evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .constraints import friction_operator, point_data
from .errors import InvalidParams, NonFiniteState, StepTooLargeForStiffness
from .geometry import BundleMap, christoffel, horizontal_cov_deriv, sharp
from .slow_manifold import default_h1_section

MODELS = ("full", "zeroth", "first")
STIFF_RATIO = 20.0


@dataclass(frozen=True)
class State:
    t: float
    q: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class SimPlan:
    """Fixed-step integration plan. ``transient_skip`` only affects error metrics."""

    model: str
    dt: float
    t_final: float
    epsilon: float
    record_every: int = 1
    transient_skip: float = 0.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidParams(f"model must be one of {MODELS}, got {self.model!r}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidParams(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_final) and self.t_final >= 0):
            raise InvalidParams(f"t_final must be non-negative, got {self.t_final}")
        if not self.epsilon > 0:
            raise InvalidParams(f"epsilon must be positive, got {self.epsilon}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise InvalidParams(f"record_every must be a positive integer, got {self.record_every}")
        if self.transient_skip < 0:
            raise InvalidParams(f"transient_skip must be non-negative, got {self.transient_skip}")

    def check_stiffness(self) -> None:
        limit = self.epsilon / STIFF_RATIO
        if self.model == "full" and self.dt > limit * (1 + 1e-12):
            raise StepTooLargeForStiffness(
                f"full model needs dt <= epsilon/{STIFF_RATIO:g} = {limit:.6g}, got dt = {self.dt:.6g}"
            )

    def step_counts(self) -> tuple[int, float]:
        """Number of whole steps and the length of the closing partial step (0 if none)."""
        n = int(np.floor(self.t_final / self.dt + 1e-9))
        rest = self.t_final - n * self.dt
        if rest <= 1e-12 * max(1.0, self.t_final):
            rest = 0.0
        return n, rest


@dataclass(frozen=True)
class Trajectory(Sequence):
    """Recorded samples of one integration, stored column-wise."""

    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    model: str = ""
    epsilon: float = float("nan")

    def __len__(self):
        return self.t.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return State(float(self.t[i]), self.q[i].copy(), self.v[i].copy())

    @property
    def final(self) -> State:
        return self[len(self) - 1]

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.t, self.q, self.v])


# right-hand sides ----------------------------------------------------------

def full_rhs(system, state: State):
    q = np.asarray(state.q, dtype=float)
    v = np.asarray(state.v, dtype=float)
    gamma = christoffel(system.metric, q, check=False)
    grad = sharp(system.metric, q, system.potential.gradient(q), check=False)
    FR = friction_operator(system.metric, system.constraints, system.friction, q)
    dv = -gamma.matrix(v) @ v - grad - FR @ v / system.epsilon
    return v.copy(), dv


def zeroth_rhs(system, state: State, pd=None):
    pd = pd or point_data(system, state.q)
    vD = pd.P @ np.asarray(state.v, dtype=float)
    dv = -pd.gamma.matrix(vD) @ vD - pd.cov_P_perp(vD) @ vD - pd.P @ pd.grad_sharp
    return vD, dv


def first_rhs(system, state: State, h1_section: Optional[BundleMap] = None, epsilon: Optional[float] = None):
    """First-order slip-corrected model; ``h1_section`` defaults to :func:`default_h1_section`."""
    eps = system.epsilon if epsilon is None else epsilon
    pd = point_data(system, state.q)
    q = pd.q
    vD, dv0 = zeroth_rhs(system, state, pd)
    hm = h1_section or default_h1_section(system)
    s1 = hm.value(q, vD)
    DV = hm.dw(q, vD)
    cross = pd.gamma.matrix(vD) @ s1 + pd.gamma.matrix(s1) @ vD
    horizontal = horizontal_cov_deriv(hm, vD, q, vD, pd.gamma)
    reaction = pd.cov_P_perp(vD) @ s1 + pd.cov_P_perp(s1) @ vD
    vertical = DV @ (pd.cov_P(vD) @ vD - pd.P @ pd.grad_sharp)
    dv = dv0 + eps * (-cross + horizontal - reaction + vertical)
    return vD + eps * s1, dv


def model_rhs(system, model: str, h1_section: Optional[BundleMap] = None) -> Callable:
    """``state -> (dq, dv)`` for the named model."""
    if model == "full":
        return lambda s: full_rhs(system, s)
    if model == "zeroth":
        return lambda s: zeroth_rhs(system, s)
    if model == "first":
        return lambda s: first_rhs(system, s, h1_section)
    raise InvalidParams(f"unknown model {model!r}")


# integration ---------------------------------------------------------------

def _rk4_step(rhs, t, q, v, h):
    k1q, k1v = rhs(State(t, q, v))
    k2q, k2v = rhs(State(t + h / 2, q + h / 2 * k1q, v + h / 2 * k1v))
    k3q, k3v = rhs(State(t + h / 2, q + h / 2 * k2q, v + h / 2 * k2v))
    k4q, k4v = rhs(State(t + h, q + h * k3q, v + h * k3v))
    q = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
    v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return q, v


def integrate(rhs: Callable, state0: State, plan: SimPlan) -> Trajectory:
    """Classical fixed-step RK4.

    Samples are taken at ``t = k dt`` for every ``record_every``-th step. When
    ``t_final`` is not a whole number of steps a closing partial step lands on it,
    and the final state is always recorded.
    """
    plan.check_stiffness()
    q = np.array(state0.q, dtype=float)
    v = np.array(state0.v, dtype=float)
    t0 = float(state0.t)
    n, rest = plan.step_counts()
    ts, qs, vs = [t0], [q], [v]
    for k in range(1, n + 1):
        q, v = _rk4_step(rhs, t0 + (k - 1) * plan.dt, q, v, plan.dt)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise NonFiniteState(f"non-finite state at step {k}")
        if k % plan.record_every == 0 or (k == n and rest == 0.0):
            ts.append(t0 + k * plan.dt)
            qs.append(q)
            vs.append(v)
    if rest > 0.0:
        q, v = _rk4_step(rhs, t0 + n * plan.dt, q, v, rest)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise NonFiniteState("non-finite state at the closing step")
        ts.append(t0 + plan.t_final)
        qs.append(q)
        vs.append(v)
    return Trajectory(np.array(ts), np.array(qs), np.array(vs), plan.model, plan.epsilon)


def _kernel_params(system, epsilon: float):
    p = system.oracle.p
    return (p.m, p.I, p.J, p.R, p.mu, float(epsilon))


def _integrate_kernel(system, state0: State, plan: SimPlan) -> Trajectory:
    plan.check_stiffness()
    code = kernels.MODEL_CODES[plan.model]
    params = _kernel_params(system, plan.epsilon)
    y = np.concatenate([np.asarray(state0.q, dtype=float), np.asarray(state0.v, dtype=float)])
    t0 = float(state0.t)
    n, rest = plan.step_counts()
    r = int(plan.record_every)
    chunks = [y[None, :]]
    steps = [0]
    try:
        whole = (n // r) * r
        if whole:
            rows = kernels.disk_rk4(code, y, params, plan.dt, whole, r)
            chunks.append(rows[1:, 1:])
            steps.extend(range(r, whole + 1, r))
            y = rows[-1, 1:]
        if n > whole:
            rows = kernels.disk_rk4(code, y, params, plan.dt, n - whole, n - whole)
            y = rows[-1, 1:]
            if rest == 0.0:
                chunks.append(rows[1:, 1:])
                steps.append(n)
        tail = None
        if rest > 0.0:
            rows = kernels.disk_rk4(code, y, params, rest, 1, 1)
            tail = rows[1:, 1:]
    except FloatingPointError as exc:
        raise NonFiniteState(str(exc)) from exc
    t = t0 + np.array(steps, dtype=float) * plan.dt
    if tail is not None:
        chunks.append(tail)
        t = np.append(t, t0 + plan.t_final)
    Y = np.vstack(chunks)
    return Trajectory(t, Y[:, :4].copy(), Y[:, 4:].copy(), plan.model, plan.epsilon)


def kernel_supported(system) -> bool:
    oracle = getattr(system, "oracle", None)
    return oracle is not None and hasattr(oracle, "p") and system.dim == 4


def simulate(system, state0: State, plan: SimPlan, backend: str = "auto",
             h1_section: Optional[BundleMap] = None) -> Trajectory:
    """Integrate ``plan.model`` from ``state0`` with ``epsilon = plan.epsilon``.

    ``backend``: ``"kernel"`` uses the closed-form disk kernels, ``"generic"`` the
    geometric pipeline, ``"auto"`` the kernel whenever the system supports it.
    """
    if backend not in ("auto", "kernel", "generic"):
        raise InvalidParams(f"unknown backend {backend!r}")
    if system.epsilon != plan.epsilon:
        system = system.with_epsilon(plan.epsilon)
    use_kernel = backend == "kernel" or (backend == "auto" and kernel_supported(system))
    if use_kernel:
        if not kernel_supported(system):
            raise InvalidParams(f"no compiled kernel for system {system.name!r}")
        return _integrate_kernel(system, state0, plan)
    return integrate(model_rhs(system, plan.model, h1_section), state0, plan)


# diagnostics ---------------------------------------------------------------

def kinetic_energy(system, q, v) -> float:
    v = np.asarray(v, dtype=float)
    return 0.5 * float(v @ system.metric.value(q) @ v)


def dissipation_rate(system, q, v) -> float:
    """Power of the friction force, ``-(1/eps) v^T G FR^# v``."""
    v = np.asarray(v, dtype=float)
    FR = friction_operator(system.metric, system.constraints, system.friction, q)
    return -float(v @ system.metric.value(q) @ FR @ v) / system.epsilon


def slip_norm(system, q, v) -> float:
    """G-norm of the constraint-violating part ``P_perp v``."""
    pd = point_data(system, q)
    u = pd.P_perp @ np.asarray(v, dtype=float)
    return float(np.sqrt(max(u @ pd.G @ u, 0.0)))


def config_error(a: Trajectory, b: Trajectory, skip: float = 0.0) -> float:
    """``sup ||q_a(t) - q_b(t)||_inf`` over sample times shared by both runs with ``t >= skip``."""
    _, ia, ib = np.intersect1d(a.t, b.t, return_indices=True)
    keep = a.t[ia] >= skip - 1e-12
    ia, ib = ia[keep], ib[keep]
    if ia.size == 0:
        raise InvalidParams("trajectories share no sample times after the transient")
    return float(np.abs(a.q[ia] - b.q[ib]).max())
