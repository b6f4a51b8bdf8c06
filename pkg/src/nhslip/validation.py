"""Invariant suites run by ``nhslip validate`` and the acceptance tests.

Each check returns a measured defect and its tolerance. Suites run in a fixed
order and the first failing invariant is named by the CLI. The two
friction-force expressions below share nothing beyond the projections, so their
agreement is a real check rather than an identity by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, List, Optional

import numpy as np

from .constraints import point_data, projections
from .dynamics import SimPlan, State, kinetic_energy, simulate
from .geometry import BundleMap, christoffel, fd_partials
from .slow_manifold import generating_residual, h1, h2

FAULTS = ("flip-P-sign",)


@dataclass(frozen=True)
class InvariantResult:
    name: str
    defect: float
    tol: float
    informational: bool = False

    @property
    def passed(self) -> bool:
        return self.informational or bool(self.defect <= self.tol)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "defect": self.defect,
            "tol": self.tol,
            "passed": self.passed,
            "informational": self.informational,
        }


def sample_disk_states(rng: np.random.Generator, n: int):
    """Random ``(q, v_theta, v_phi)`` with ``theta`` in [0, 2 pi) and speeds in [-2, 2]."""
    out = []
    for _ in range(n):
        q = np.array([rng.uniform(0, 2 * np.pi), *rng.uniform(-5, 5, size=3)])
        vt, vp = rng.uniform(-2, 2, size=2)
        out.append((q, vt, vp))
    return out


def _maxabs(M) -> float:
    return float(np.max(np.abs(M))) if np.size(M) else 0.0


# friction force, two independent expressions --------------------------------

CLASSICAL_FD_STEP = 1e-3


def classical_friction_force(system, q, v, h: BundleMap, step: float = CLASSICAL_FD_STEP) -> np.ndarray:
    """Time-derivative form with plain partial derivatives (zero potential).

    ``dP_perp/dq`` and the partials of ``h`` are taken by finite differences of
    the projection matrices and of ``h`` itself. The default step balances
    truncation and roundoff for the 4th-order stencil.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)

    def P_perp_at(x):
        return projections(system.metric, system.constraints, system.friction, x, check=False).P_perp

    pp = projections(system.metric, system.constraints, system.friction, q, check=False)
    P, P_perp = pp.P, pp.P_perp
    dPp = fd_partials(P_perp_at, q, step)
    dPp_v = np.einsum("kij,k->ij", dPp, v)
    dP_v = -dPp_v
    Gv = christoffel(system.metric, q, check=False).matrix(v) @ v
    w = P @ v
    dh_dq = fd_partials(lambda x: h.value(x, w), q, step).T
    dh_dw = fd_partials(lambda y: h.value(q, y), w, step).T
    return (
        -dPp_v @ v
        + P_perp @ Gv
        + dh_dq @ v
        + dh_dw @ (dP_v @ v)
        - dh_dw @ (P @ Gv)
    )


def covariant_friction_force(system, q, v, h: BundleMap) -> np.ndarray:
    """Covariant form ``-(nabla_v P_perp)(v) + D^V h (nabla_v P)(v) + nabla^H_v h(P v)``."""
    from .geometry import horizontal_cov_deriv

    pd = point_data(system, q)
    v = np.asarray(v, dtype=float)
    w = pd.P @ v
    return (
        -pd.cov_P_perp(v) @ v
        + h.dw(pd.q, w) @ (pd.cov_P(v) @ v)
        + horizontal_cov_deriv(h, v, pd.q, w, pd.gamma)
    )


# suites ---------------------------------------------------------------------

def projection_suite(system, samples, fault: Optional[str] = None) -> List[InvariantResult]:
    worst = dict.fromkeys(
        [
            "projection idempotence",
            "complement idempotence",
            "projection orthogonality",
            "projection completeness",
            "distribution annihilated by constraints",
            "G-self-adjointness",
            "friction kernel contains distribution",
            "Q-map identity",
        ],
        0.0,
    )
    for q, _, _ in samples:
        pp = projections(system.metric, system.constraints, system.friction, q)
        P = -pp.P if fault == "flip-P-sign" else pp.P
        Pp = pp.P_perp
        G = system.metric.value(q)
        A = system.constraints.value(q)
        I = np.eye(P.shape[0])
        defects = [
            P @ P - P,
            Pp @ Pp - Pp,
            P @ Pp,
            P + Pp - I,
            A @ P,
            P.T @ G - G @ P,
            pp.FR_sharp @ P,
            pp.Q @ pp.FR_sharp - Pp,
        ]
        for key, d in zip(worst, defects):
            worst[key] = max(worst[key], _maxabs(d))
    return [InvariantResult(k, v, 1e-10) for k, v in worst.items()]


def oracle_suite(system, samples) -> List[InvariantResult]:
    """Generic pipeline against the closed-form disk quantities."""
    o = system.oracle
    h1_exact = o.h1_map()
    mats = {"oracle P": 0.0, "oracle P_perp": 0.0, "oracle FR_sharp": 0.0}
    sec = {"oracle h1": 0.0, "oracle h2 (analytic partials)": 0.0}
    printed = 0.0
    range_defect = 0.0
    for q, vt, vp in samples:
        th = q[0]
        pp = projections(system.metric, system.constraints, system.friction, q)
        mats["oracle P"] = max(mats["oracle P"], _maxabs(pp.P - o.P(th)))
        mats["oracle P_perp"] = max(mats["oracle P_perp"], _maxabs(pp.P_perp - o.P_perp(th)))
        mats["oracle FR_sharp"] = max(mats["oracle FR_sharp"], _maxabs(pp.FR_sharp - o.FR_sharp(th)))
        w = o.vD(th, vt, vp)
        pd = point_data(system, q)
        g1 = h1(system, q, w, pd)
        g2 = h2(system, q, w, pd, h1_exact)
        sec["oracle h1"] = max(sec["oracle h1"], _maxabs(g1 - o.h1(th, vt, vp)))
        sec["oracle h2 (analytic partials)"] = max(
            sec["oracle h2 (analytic partials)"], _maxabs(g2 - o.h2(th, vt, vp))
        )
        printed = max(printed, _maxabs(g2 - o.h2_printed(th, vt, vp)))
        range_defect = max(range_defect, _maxabs(pd.P @ g1), _maxabs(pd.P @ g2))
    out = [InvariantResult(k, v, 1e-10) for k, v in mats.items()]
    out += [InvariantResult(k, v, 1e-8) for k, v in sec.items()]
    out.append(InvariantResult("slip range in complement", range_defect, 1e-9))
    out.append(InvariantResult("oracle h2 vs opposite-sign closed form", printed, 1e-8, informational=True))
    return out


def force_suite(system, samples) -> List[InvariantResult]:
    worst = 0.0
    hmap = system.oracle.slip_map(2)
    for q, vt, vp in samples:
        w = system.oracle.vD(q[0], vt, vp)
        v = w + hmap.value(q, w)
        Fc = classical_friction_force(system, q, v, hmap)
        Fv = covariant_friction_force(system, q, v, hmap)
        scale = max(np.linalg.norm(Fv), np.linalg.norm(Fc), 1e-300)
        worst = max(worst, float(np.linalg.norm(Fc - Fv) / scale))
    return [InvariantResult("reaction force equivalence", worst, 1e-8)]


def residual_order(system, samples, epsilons=(0.04, 0.02, 0.01)) -> tuple[float, list]:
    """Fitted log-log slope of the order-2 generating residual over ``epsilons``."""
    errs = []
    for eps in epsilons:
        s = system.with_epsilon(eps)
        hmap = s.oracle.slip_map(2)
        e = 0.0
        for q, vt, vp in samples:
            w = s.oracle.vD(q[0], vt, vp)
            e = max(e, _maxabs(generating_residual(s, q, w, hmap)))
        errs.append(e)
    slope = float(np.polyfit(np.log(epsilons), np.log(errs), 1)[0])
    return slope, errs


def energy_suite(system) -> List[InvariantResult]:
    o = system.oracle
    eps = system.epsilon
    q0 = np.zeros(4)
    vD = o.vD(0.0, 1.0, 1.0)
    out = []

    plan = SimPlan("zeroth", 1e-3, 10.0, eps)
    tr = simulate(system, State(0.0, q0, vD), plan)
    ke = np.array([kinetic_energy(system, q, v) for q, v in zip(tr.q, tr.v)])
    tang = max(_maxabs(system.constraints.value(q) @ v) for q, v in zip(tr.q, tr.v))
    out.append(InvariantResult("zeroth-order energy conservation", float(np.abs(ke - ke[0]).max()), 1e-8))
    out.append(InvariantResult("zeroth-order constraint tangency", tang, 1e-7))
    out.append(InvariantResult("zeroth-order v_phi invariance", float(np.abs(tr.v[:, 3] - tr.v[0, 3]).max()), 1e-10))

    v0 = vD + o.slip(0.0, 1.0, 1.0, 2)
    plan = SimPlan("full", eps / 50, 1.0, eps)
    tr = simulate(system, State(0.0, q0, v0), plan)
    ke = np.array([kinetic_energy(system, q, v) for q, v in zip(tr.q, tr.v)])
    out.append(InvariantResult("full-model energy monotonicity", float(max(np.diff(ke).max(), 0.0)), 1e-9))

    drift = 0.0
    for model in ("full", "zeroth", "first"):
        tr = simulate(system, State(0.0, q0, v0), replace(plan, model=model))
        drift = max(drift, float(np.abs(tr.v[:, 0] - tr.v[0, 0]).max()))
    out.append(InvariantResult("v_theta invariance", drift, 1e-10))

    pure_slip = o.Dperp_frame(0.0) @ np.array([1.0, 0.5])
    plan = SimPlan("full", eps / 50, 20 * eps, eps)
    tr = simulate(system, State(0.0, q0, pure_slip), plan)
    last = tr.final
    Pp = projections(system.metric, system.constraints, system.friction, last.q).P_perp
    out.append(InvariantResult("attractivity of the distribution", float(np.linalg.norm(Pp @ last.v)), 1e-6))
    return out


def run_validation(system, seed: int = 0, n_samples: int = 100, fault: Optional[str] = None,
                   progress: Optional[Callable[[str], None]] = None) -> List[InvariantResult]:
    """All suites in order; stops early only on exceptions, never on a failed check."""
    rng = np.random.default_rng(seed)
    samples = sample_disk_states(rng, n_samples)
    results: List[InvariantResult] = []
    results += projection_suite(system, samples, fault)
    results += oracle_suite(system, samples)
    results += force_suite(system, samples)
    slope, _ = residual_order(system, samples[:10])
    results.append(InvariantResult("generating residual order 3", abs(slope - 3.0), 0.3))
    results += energy_suite(system)
    if progress is not None:
        for r in results:
            progress(r.name)
    return results


def first_failure(results) -> Optional[InvariantResult]:
    return next((r for r in results if not r.passed), None)
