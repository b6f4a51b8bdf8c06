"""Epsilon sweeps comparing reduced models against the full friction model."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .dynamics import SimPlan, State, config_error, simulate
from .errors import InvalidParams
from .systems import DiskParams, disk_system

ORDER_MODELS = {0: "zeroth", 1: "first", "full": "full"}
STEPS_MIN = 20


@dataclass(frozen=True)
class SweepSpec:
    """One convergence study on the disk.

    Each run uses ``dt = epsilon / steps_per_epsilon`` and discards
    ``t < transient_epsilons * epsilon`` before measuring the error.
    """

    params: DiskParams
    epsilons: tuple
    orders: tuple = (0, 1)
    t_final: float = 1.0
    steps_per_epsilon: int = 50
    transient_epsilons: float = 10.0
    theta: float = 0.0
    v_theta: float = 1.0
    v_phi: float = 1.0
    slip_order: int = 2
    backend: str = "auto"

    def __post_init__(self):
        if len(self.epsilons) < 3:
            raise InvalidParams("a sweep needs at least three epsilon values")
        for o in self.orders:
            if o not in ORDER_MODELS:
                raise InvalidParams(f"unsupported sweep order {o!r}; use 0, 1 or 'full'")
        if self.steps_per_epsilon < STEPS_MIN:
            raise InvalidParams(f"steps_per_epsilon must be >= {STEPS_MIN}")


@dataclass(frozen=True)
class SlopeFit:
    order: object
    slope: Optional[float]
    intercept: Optional[float]
    residual: Optional[float]

    def as_dict(self):
        return {"order": self.order, "slope": self.slope, "intercept": self.intercept, "residual": self.residual}


@dataclass
class SweepResult:
    rows: List[tuple] = field(default_factory=list)
    fits: List[SlopeFit] = field(default_factory=list)

    def errors(self, order) -> np.ndarray:
        return np.array([e for _, o, e in self.rows if o == order])


def fit_slope(epsilons: Sequence[float], errors: Sequence[float]) -> tuple:
    """Least-squares line through ``(log eps, log err)``; ``None`` entries if any error is zero."""
    x = np.log(np.asarray(epsilons, dtype=float))
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0) or not np.all(np.isfinite(e)):
        return None, None, None
    y = np.log(e)
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    rms = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    return float(slope), float(intercept), rms


def _run_epsilon(spec: SweepSpec, eps: float) -> list:
    system = disk_system(DiskParams(**{**spec.params.__dict__, "epsilon": eps}))
    o = system.oracle
    q0 = np.array([spec.theta, 0.0, 0.0, 0.0])
    v0 = o.vD(spec.theta, spec.v_theta, spec.v_phi) + o.slip(spec.theta, spec.v_theta, spec.v_phi, spec.slip_order)
    dt = eps / spec.steps_per_epsilon
    skip = spec.transient_epsilons * eps
    base = SimPlan("full", dt, spec.t_final, eps, transient_skip=skip)
    ref = simulate(system, State(0.0, q0, v0), base, backend=spec.backend)
    out = []
    for order in spec.orders:
        model = ORDER_MODELS[order]
        plan = SimPlan(model, dt, spec.t_final, eps, transient_skip=skip)
        tr = ref if model == "full" else simulate(system, State(0.0, q0, v0), plan, backend=spec.backend)
        out.append((eps, order, config_error(ref, tr, skip)))
    return out


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Runs one task per epsilon; results are joined in grid order so output is independent of ``jobs``."""
    if jobs < 1:
        raise InvalidParams("jobs must be >= 1")
    if jobs == 1:
        chunks = [_run_epsilon(spec, e) for e in spec.epsilons]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_epsilon, [spec] * len(spec.epsilons), spec.epsilons))
    result = SweepResult()
    for chunk in chunks:
        result.rows.extend(chunk)
    for order in spec.orders:
        slope, intercept, res = fit_slope(spec.epsilons, result.errors(order))
        result.fits.append(SlopeFit(order, slope, intercept, res))
    return result
