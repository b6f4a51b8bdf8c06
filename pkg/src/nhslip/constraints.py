"""Constraint distribution, G-orthogonal projections, Rayleigh friction and the Q-map."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, IllConditionedFrame, InvalidParams, RankDeficientConstraints
from .geometry import (
    DEFAULT_FD_STEP,
    ChristoffelData,
    TensorField11,
    christoffel,
    cov_deriv_tensor,
    fd_partials,
    sharp,
)

COND_LIMIT = 1e12
RANK_RTOL = 1e-12
BLOCK_ATOL = 1e-8
FRAME_ATOL = 1e-10


@dataclass(frozen=True)
class ConstraintSet:
    """``m`` linear velocity constraints ``A(q) v = 0``.

    ``partials_at(q)`` may return ``dA`` of shape ``(n, m, n)`` with
    ``dA[k] = dA/dq^k``; otherwise finite differences are used.
    """

    m: int
    A_at: Callable
    D_frame_at: Optional[Callable] = None
    partials_at: Optional[Callable] = None
    fd_step: float = DEFAULT_FD_STEP

    def value(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        A = np.asarray(self.A_at(q), dtype=float).reshape(self.m, q.size)
        return A

    def partials(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.m == 0:
            return np.zeros((q.size, 0, q.size))
        if self.partials_at is not None:
            return np.asarray(self.partials_at(q), dtype=float)
        return fd_partials(self.value, q, self.fd_step)


@dataclass(frozen=True)
class FrictionSpec:
    """Friction coefficients ``mu(q)`` (m x m, SPD, kg/s) and time-scale ratio ``epsilon``."""

    mu_at: Callable
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidParams(f"epsilon must be positive, got {self.epsilon}")

    def value(self, q) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.mu_at(np.asarray(q, dtype=float)), dtype=float))


@dataclass(frozen=True)
class ProjectionPair:
    P: np.ndarray
    P_perp: np.ndarray
    D_frame: np.ndarray
    Dperp_frame: np.ndarray
    Q: np.ndarray
    FR_sharp: np.ndarray


def _check_rank(A: np.ndarray) -> None:
    if A.shape[0] == 0:
        return
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= RANK_RTOL * max(1.0, s[0]) or A.shape[0] > A.shape[1]:
        raise RankDeficientConstraints(f"constraint matrix has rank < {A.shape[0]}")


def _guard_cond(M: np.ndarray, what: str) -> None:
    if M.size and np.linalg.cond(M) > COND_LIMIT:
        raise IllConditionedFrame(f"{what} is ill-conditioned (cond > {COND_LIMIT:g})")


def complement_frame(metric, cs: ConstraintSet, q) -> np.ndarray:
    """Columns ``G^-1 A^T`` spanning the G-orthogonal complement of the distribution."""
    A = cs.value(q)
    _check_rank(A)
    G = metric.value(q)
    if cs.m == 0:
        return np.zeros((G.shape[0], 0))
    return np.linalg.solve(G, A.T)


def distribution_frame(cs: ConstraintSet, q) -> np.ndarray:
    """Columns spanning ``ker A(q)``.

    A user frame wins. Otherwise an orthonormal null-space basis is taken
    from the SVD, each column signed so its largest-magnitude entry is positive.
    """
    q = np.asarray(q, dtype=float)
    A = cs.value(q)
    _check_rank(A)
    n = q.size
    if cs.D_frame_at is not None:
        S = np.asarray(cs.D_frame_at(q), dtype=float)
        if S.shape != (n, n - cs.m):
            raise DimensionMismatch(f"distribution frame has shape {S.shape}")
        if A.size and np.abs(A @ S).max() > FRAME_ATOL * max(1.0, np.abs(A).max() * np.abs(S).max()):
            raise IllConditionedFrame("user distribution frame is not annihilated by the constraints")
        return S
    if cs.m == 0:
        return np.eye(n)
    _, _, Vt = np.linalg.svd(A)
    S = Vt[cs.m:].T.copy()
    for j in range(S.shape[1]):
        i = np.argmax(np.abs(S[:, j]))
        if S[i, j] < 0:
            S[:, j] = -S[:, j]
    return S


def friction_operator(metric, cs: ConstraintSet, fs: FrictionSpec, q) -> np.ndarray:
    """``(dR)^# = G^-1 A^T mu A``, without the ``1/epsilon`` scaling."""
    q = np.asarray(q, dtype=float)
    if cs.m == 0:
        return np.zeros((q.size, q.size))
    A = cs.value(q)
    return np.linalg.solve(metric.value(q), A.T) @ fs.value(q) @ A


def projections(metric, cs: ConstraintSet, fs: FrictionSpec, q, check: bool = True) -> ProjectionPair:
    """Projection pair, friction operator ``G^-1 A^T mu A`` and Q-map at ``q``.

    ``P_perp = W (A W)^-1 A`` with ``W = G^-1 A^T``. The Q-map is built in the
    frame ``Phi = [S | W]`` by inverting the complement block of the friction
    operator and mapping back.
    """
    q = np.asarray(q, dtype=float)
    G = metric.value(q, check=check)
    n = G.shape[0]
    A = cs.value(q)
    if A.shape[1] != n:
        raise DimensionMismatch(f"constraints have {A.shape[1]} columns, metric is {n}x{n}")
    if cs.m == 0:
        Z = np.zeros((n, n))
        return ProjectionPair(np.eye(n), Z, np.eye(n), np.zeros((n, 0)), Z.copy(), Z.copy())
    _check_rank(A)
    W = np.linalg.solve(G, A.T)
    M = A @ W
    _guard_cond(M, "A G^-1 A^T")
    P_perp = W @ np.linalg.solve(M, A)
    P = np.eye(n) - P_perp
    S = distribution_frame(cs, q)
    mu = fs.value(q)
    FR = W @ mu @ A

    Phi = np.hstack([S, W])
    _guard_cond(Phi, "frame [S | W]")
    Phi_inv = np.linalg.inv(Phi)
    FR_phi = Phi_inv @ FR @ Phi
    k = n - cs.m
    scale = max(1.0, np.abs(FR_phi).max())
    off = max(np.abs(FR_phi[:k, :]).max(initial=0.0), np.abs(FR_phi[k:, :k]).max(initial=0.0))
    if off > BLOCK_ATOL * scale:
        raise IllConditionedFrame(f"friction operator is not block diagonal in [S | W] (off-block {off:.3g})")
    block = FR_phi[k:, k:]
    _guard_cond(block, "friction block on the complement")
    Q_phi = np.zeros((n, n))
    Q_phi[k:, k:] = np.linalg.inv(block)
    Q = Phi @ Q_phi @ Phi_inv
    return ProjectionPair(P, P_perp, S, W, Q, FR)


def q_map_apply(pp: ProjectionPair, u) -> np.ndarray:
    return pp.Q @ np.asarray(u, dtype=float)


def perp_projector_partials(metric, cs: ConstraintSet, q) -> np.ndarray:
    """``dP_perp/dq^k`` from the product rule on ``W (A W)^-1 A``.

    Exact whenever the metric and constraint partials are exact.
    """
    q = np.asarray(q, dtype=float)
    n = q.size
    if cs.m == 0:
        return np.zeros((n, n, n))
    G = metric.value(q)
    dG = metric.partials(q)
    A = cs.value(q)
    dA = cs.partials(q)
    Ginv = np.linalg.inv(G)
    W = Ginv @ A.T
    Minv = np.linalg.inv(A @ W)
    # dW[k] = G^-1 (dA[k]^T - dG[k] W)
    dW = np.einsum("ij,kjl->kil", Ginv, dA.transpose(0, 2, 1) - dG @ W)
    dM = dA @ W + A @ dW
    WMinv = W @ Minv
    MinvA = Minv @ A
    return dW @ MinvA - WMinv @ dM @ MinvA + WMinv @ dA


@dataclass(frozen=True)
class PointData:
    """Everything the slip and dynamics formulas need at one configuration."""

    q: np.ndarray
    G: np.ndarray
    gamma: ChristoffelData
    pp: ProjectionPair
    dP_perp: np.ndarray
    grad_sharp: np.ndarray

    @property
    def P(self):
        return self.pp.P

    @property
    def P_perp(self):
        return self.pp.P_perp

    def perp_field(self) -> TensorField11:
        return TensorField11(lambda _: self.pp.P_perp, lambda _: self.dP_perp)

    def proj_field(self) -> TensorField11:
        return TensorField11(lambda _: self.pp.P, lambda _: -self.dP_perp)

    def cov_P_perp(self, X) -> np.ndarray:
        """Matrix of ``nabla_X P_perp``."""
        return cov_deriv_tensor(self.perp_field(), X, self.q, self.gamma)

    def cov_P(self, X) -> np.ndarray:
        return cov_deriv_tensor(self.proj_field(), X, self.q, self.gamma)


def point_data(system, q, check: bool = False) -> PointData:
    q = np.asarray(q, dtype=float)
    metric = system.metric
    cs = system.constraints
    G = metric.value(q, check=check)
    gamma = christoffel(metric, q, check=check)
    pp = projections(metric, cs, system.friction, q, check=check)
    dP_perp = perp_projector_partials(metric, cs, q)
    grad_sharp = sharp(metric, q, system.potential.gradient(q), check=check)
    return PointData(q, G, gamma, pp, dP_perp, grad_sharp)


def lagrange_multiplier(system, q, v, pd: Optional[PointData] = None) -> np.ndarray:
    """Ideal constraint reaction ``-(nabla_v P_perp)(v) + P_perp (dV)^#``, evaluated as written."""
    pd = pd or point_data(system, q)
    v = np.asarray(v, dtype=float)
    return -pd.cov_P_perp(v) @ v + pd.P_perp @ pd.grad_sharp
