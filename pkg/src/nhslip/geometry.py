"""Riemannian computations on a coordinate chart.

Everything is stored as coordinate-basis component arrays. Derivative arrays
put the differentiation index first: ``partials[k] == d(field)/dq^k``.
Fields without analytic derivatives are differentiated with fourth-order
central differences, step ``fd_step * max(1, |q^k|)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, SingularMetric

DEFAULT_FD_STEP = 1e-5


def fd_partials(f: Callable, x, step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Fourth-order central differences of ``f`` at ``x``.

    Returns an array of shape ``(len(x),) + shape(f(x))`` whose ``k``-th slice
    is the partial derivative with respect to ``x[k]``.
    """
    x = np.asarray(x, dtype=float)
    out = []
    for k in range(x.size):
        hk = step * max(1.0, abs(x[k]))
        e = np.zeros_like(x)
        e[k] = hk
        fm2 = np.asarray(f(x - 2 * e), dtype=float)
        fm1 = np.asarray(f(x - e), dtype=float)
        fp1 = np.asarray(f(x + e), dtype=float)
        fp2 = np.asarray(f(x + 2 * e), dtype=float)
        out.append((fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * hk))
    return np.array(out)


def _as_vector(x, n: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatch(f"{name}: expected shape ({n},), got {x.shape}")
    return x


@dataclass(frozen=True)
class MetricField:
    """Kinetic-energy metric ``G(q)``, a symmetric positive-definite n x n array."""

    dim: int
    value_at: Callable
    partials_at: Optional[Callable] = None
    fd_step: float = DEFAULT_FD_STEP

    def value(self, q, check: bool = False) -> np.ndarray:
        G = np.asarray(self.value_at(np.asarray(q, dtype=float)), dtype=float)
        if G.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"metric value has shape {G.shape}")
        if check:
            check_positive_definite(G)
        return G

    def partials(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.partials_at is not None:
            return np.asarray(self.partials_at(q), dtype=float)
        return fd_partials(self.value_at, q, self.fd_step)


@dataclass(frozen=True)
class PotentialField:
    value_at: Callable
    gradient_at: Optional[Callable] = None
    fd_step: float = DEFAULT_FD_STEP

    @classmethod
    def zero(cls, dim: int) -> "PotentialField":
        return cls(lambda q: 0.0, lambda q: np.zeros(dim))

    def value(self, q) -> float:
        return float(self.value_at(np.asarray(q, dtype=float)))

    def gradient(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.gradient_at is not None:
            return np.asarray(self.gradient_at(q), dtype=float)
        return fd_partials(self.value_at, q, self.fd_step)


@dataclass(frozen=True)
class TensorField11:
    """A (1,1)-tensor field such as a projection map, as an n x n array per point."""

    value_at: Callable
    partials_at: Optional[Callable] = None
    fd_step: float = DEFAULT_FD_STEP

    def value(self, q) -> np.ndarray:
        return np.asarray(self.value_at(np.asarray(q, dtype=float)), dtype=float)

    def partials(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.partials_at is not None:
            return np.asarray(self.partials_at(q), dtype=float)
        return fd_partials(self.value_at, q, self.fd_step)


@dataclass(frozen=True)
class BundleMap:
    """Fibre-preserving map ``h(q, w)`` on the tangent bundle.

    ``analytic_partials(q, w)`` returns ``(dh_dq, dh_dw)`` with
    ``dh_dq[m, k] = dh^m/dq^k`` and ``dh_dw[m, l] = dh^m/dw^l``.
    """

    eval: Callable
    analytic_partials: Optional[Callable] = None
    fd_step: float = DEFAULT_FD_STEP

    def __call__(self, q, w) -> np.ndarray:
        return self.value(q, w)

    def value(self, q, w) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(q, dtype=float), np.asarray(w, dtype=float)), dtype=float)

    def dq(self, q, w) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.analytic_partials is not None:
            return np.asarray(self.analytic_partials(q, w)[0], dtype=float)
        return fd_partials(lambda x: self.eval(x, w), q, self.fd_step).T

    def dw(self, q, w) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.analytic_partials is not None:
            return np.asarray(self.analytic_partials(q, w)[1], dtype=float)
        return fd_partials(lambda x: self.eval(q, x), w, self.fd_step).T


@dataclass(frozen=True)
class ChristoffelData:
    """Connection coefficients ``coeffs[i, j, k] = Gamma^i_{jk}``."""

    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def matrix(self, X) -> np.ndarray:
        return gamma_matrix(self, X)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


def check_positive_definite(G: np.ndarray) -> None:
    if not np.allclose(G, G.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(G).max())):
        raise SingularMetric("metric is not symmetric")
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("metric is not positive definite") from exc


def christoffel(metric: MetricField, q, check: bool = True) -> ChristoffelData:
    """Levi-Civita coefficients of ``metric`` at ``q``."""
    q = _as_vector(q, metric.dim, "q")
    G = metric.value(q, check=check)
    dG = metric.partials(q)
    if not np.any(dG):
        return ChristoffelData(np.zeros((metric.dim,) * 3))
    # T[j, k, l] = d_j G_kl + d_k G_jl - d_l G_jk
    T = dG + dG.transpose(1, 0, 2) - dG.transpose(1, 2, 0)
    try:
        coeffs = 0.5 * np.einsum("il,jkl->ijk", np.linalg.inv(G), T)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("metric is singular") from exc
    return ChristoffelData(coeffs)


def gamma_matrix(gamma: ChristoffelData, X) -> np.ndarray:
    """``[Gamma(q, X)]^i_k = Gamma^i_{kj} X^j``."""
    X = _as_vector(X, gamma.dim, "X")
    return np.einsum("ikj,j->ik", gamma.coeffs, X)


def sharp(metric: MetricField, q, omega, check: bool = True) -> np.ndarray:
    G = metric.value(q, check=check)
    omega = _as_vector(omega, metric.dim, "omega")
    try:
        return np.linalg.solve(G, omega)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("metric is singular") from exc


def flat(metric: MetricField, q, X, check: bool = True) -> np.ndarray:
    G = metric.value(q, check=check)
    return G @ _as_vector(X, metric.dim, "X")


def cov_deriv_vector(Y: Callable, X, q, gamma: ChristoffelData,
                     jacobian: Optional[Callable] = None,
                     fd_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """``nabla_X Y = [dY/dq] X + [Gamma(q, X)] Y`` for a vector field ``Y(q)``."""
    n = gamma.dim
    q = _as_vector(q, n, "q")
    X = _as_vector(X, n, "X")
    if jacobian is not None:
        J = np.asarray(jacobian(q), dtype=float)
    else:
        J = fd_partials(Y, q, fd_step).T
    return J @ X + gamma_matrix(gamma, X) @ np.asarray(Y(q), dtype=float)


def cov_deriv_tensor(A: TensorField11, X, q, gamma: ChristoffelData) -> np.ndarray:
    """Matrix of ``nabla_X A`` for a (1,1)-tensor field."""
    n = gamma.dim
    q = _as_vector(q, n, "q")
    X = _as_vector(X, n, "X")
    dA = A.partials(q)
    if dA.shape != (n, n, n):
        raise DimensionMismatch(f"tensor partials have shape {dA.shape}")
    out = np.einsum("kij,k->ij", dA, X)
    if not gamma.is_zero():
        GX = gamma_matrix(gamma, X)
        Av = A.value(q)
        out = out + GX @ Av - Av @ GX
    return out


def vertical_jacobian(h: BundleMap, q, w) -> np.ndarray:
    """``D^V h = dh^m/dw^l``."""
    return h.dw(q, w)


def horizontal_cov_deriv(h: BundleMap, X, q, w, gamma: ChristoffelData) -> np.ndarray:
    """``nabla^H_X h = [dh/dq] X + [Gamma(q, X)] h - [D^V h][Gamma(q, X)] w``."""
    n = gamma.dim
    q = _as_vector(q, n, "q")
    X = _as_vector(X, n, "X")
    w = _as_vector(w, n, "w")
    out = h.dq(q, w) @ X
    if not gamma.is_zero():
        GX = gamma_matrix(gamma, X)
        out = out + GX @ h.value(q, w) - h.dw(q, w) @ (GX @ w)
    return out
