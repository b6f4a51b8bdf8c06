import dataclasses

import numpy as np
import pytest

from conftest import sleigh_system
from nhslip.constraints import point_data
from nhslip.dynamics import (
    SimPlan,
    State,
    Trajectory,
    config_error,
    dissipation_rate,
    first_rhs,
    full_rhs,
    integrate,
    kinetic_energy,
    model_rhs,
    simulate,
    slip_norm,
    zeroth_rhs,
)
from nhslip.errors import InvalidParams, NonFiniteState, StepTooLargeForStiffness
from nhslip.studies import SweepSpec, run_sweep
from nhslip.systems import DiskParams, disk_system

Q0 = np.zeros(4)
UNIT = np.array([1.0, 1.0, 0.0, 1.0])


def test_full_rhs_examples(disk, disk01):
    dq, dv = full_rhs(disk, State(0, Q0, UNIT))
    assert np.allclose(dv, 0) and np.array_equal(dq, UNIT)
    _, dv = full_rhs(disk01, State(0, Q0, [0, 1, 0, 0]))
    assert np.allclose(dv, [0, -10, 0, 20], atol=1e-12)


def test_full_rhs_friction_scales_with_inverse_epsilon(disk, rng):
    v = rng.normal(size=4)
    _, a = full_rhs(disk, State(0, Q0, v))
    _, b = full_rhs(disk.with_epsilon(2 * disk.epsilon), State(0, Q0, v))
    assert np.allclose(b, a / 2, rtol=1e-14, atol=0)


def test_full_rhs_energy_rate(rng):
    s = sleigh_system(slope=0.7)
    for _ in range(5):
        q, v = rng.normal(size=(2, 3))
        _, dv = full_rhs(s, State(0, q, v))
        # d/dt 1/2 v.Gv along the flow, with dG/dt by finite differences along v
        h = 1e-6
        dG = (s.metric.value(q + h * v) - s.metric.value(q - h * v)) / (2 * h)
        rate = v @ s.metric.value(q) @ dv + 0.5 * v @ dG @ v
        expect = dissipation_rate(s, q, v) - s.potential.gradient(q) @ v
        assert rate == pytest.approx(expect, rel=1e-6, abs=1e-8)


def test_zeroth_rhs_examples(disk):
    o = disk.oracle
    q = np.array([np.pi / 2, 0, 0, 0])
    _, dv = zeroth_rhs(disk, State(0, q, o.vD(np.pi / 2, 2, 3)))
    assert np.allclose(dv, [0, -6, 0, 0], atol=1e-12)
    _, dv = zeroth_rhs(disk, State(0, [0.7, 0, 0, 0], o.vD(0.7, 0.0, 2.0)))
    assert np.allclose(dv, 0, atol=1e-12)


def test_zeroth_rhs_disk_components(disk, rng):
    o = disk.oracle
    for _ in range(20):
        th, vt, vp = rng.uniform(0, 6), *rng.normal(size=2)
        _, dv = zeroth_rhs(disk, State(0, [th, 0, 0, 0], o.vD(th, vt, vp)))
        assert abs(dv[0]) < 1e-12 and abs(dv[3]) < 1e-12
        assert np.allclose(dv, o.zeroth_accel(th, vt, vp), atol=1e-12)


def test_zeroth_rhs_tangent_to_distribution(rng):
    """d/dt (A(q) v) = dA[v] v + A dv vanishes at the RHS level."""
    s = sleigh_system(slope=0.4)
    for _ in range(10):
        q = rng.uniform(-2, 2, 3)
        v = point_data(s, q).P @ rng.normal(size=3)
        dq, dv = zeroth_rhs(s, State(0, q, v))
        dA = s.constraints.partials(q)
        rate = np.einsum("kij,k->ij", dA, dq) @ v + s.constraints.value(q) @ dv
        assert np.abs(rate).max() <= 1e-9


def test_first_rhs_examples(disk01):
    # Correction sign as confirmed by test_h2_sign_matches_stiff_simulation and
    # test_first_order_error_is_second_order below.
    dq, dv = first_rhs(disk01, State(0, Q0, UNIT))
    assert np.allclose(dv, [0, 1 / 30, 1, -1 / 15], atol=1e-12)
    assert np.allclose(dq, [1, 1, -0.1, 1], atol=1e-12)


def test_first_rhs_epsilon_zero_equals_zeroth(disk, rng):
    o = disk.oracle
    for _ in range(5):
        th, vt, vp = rng.uniform(0, 6), *rng.normal(size=2)
        st = State(0, [th, 0, 0, 0], o.vD(th, vt, vp))
        a = first_rhs(disk, st, epsilon=0.0)
        b = zeroth_rhs(disk, st)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_first_rhs_generic_fd_matches_oracle(disk_fd, rng):
    o = disk_fd.oracle
    for _ in range(10):
        th, vt, vp = rng.uniform(0, 6), *rng.uniform(-2, 2, 2)
        dq, dv = first_rhs(disk_fd, State(0, [th, 0, 0, 0], o.vD(th, vt, vp)))
        assert np.allclose(dv, o.first_accel(th, vt, vp), atol=1e-7)
        assert np.allclose(dq, o.first_qdot(th, vt, vp), atol=1e-10)


def test_kernel_rhs_matches_generic(rng):
    from nhslip import _kernels_py, kernels

    for eps in (0.1, 0.01):
        s = disk_system(DiskParams(m=1.3, I=0.8, J=0.4, R=0.9, mu=1.7, epsilon=eps))
        p = s.oracle.p
        params = (p.m, p.I, p.J, p.R, p.mu, eps)
        for _ in range(20):
            q, v = rng.uniform(-3, 3, 4), rng.normal(size=4)
            for code, model in enumerate(("full", "zeroth", "first")):
                dq, dv = model_rhs(s, model)(State(0, q, v))
                ref = np.concatenate([dq, dv])
                for impl in (_kernels_py.disk_rhs, kernels.disk_rhs):
                    assert np.allclose(impl(code, np.concatenate([q, v]), params), ref, rtol=1e-10, atol=1e-10)


def test_simplan_validation():
    with pytest.raises(InvalidParams):
        SimPlan("zeroth", 0.0, 1.0, 0.1)
    with pytest.raises(InvalidParams):
        SimPlan("bogus", 0.1, 1.0, 0.1)
    with pytest.raises(InvalidParams):
        SimPlan("zeroth", 0.1, 1.0, 0.1, record_every=0)
    with pytest.raises(StepTooLargeForStiffness):
        SimPlan("full", 0.01, 1.0, 0.1).check_stiffness()
    SimPlan("full", 0.005, 1.0, 0.1).check_stiffness()


def test_integrate_zero_rhs():
    plan = SimPlan("zeroth", 0.1, 1.0, 1.0)
    tr = integrate(lambda s: (np.zeros(2), np.zeros(2)), State(0, [1.0, 2.0], [3.0, 4.0]), plan)
    assert np.all(tr.q == [1.0, 2.0]) and np.all(tr.v == [3.0, 4.0])
    assert len(tr) == 11


def test_integrate_linear_decay():
    plan = SimPlan("zeroth", 0.01, 1.0, 1.0)
    tr = integrate(lambda s: (np.zeros(1), -s.v), State(0, [0.0], [1.0]), plan)
    assert tr.t[-1] == pytest.approx(1.0)
    assert abs(tr.v[-1, 0] - np.exp(-1)) <= 1e-9


def test_integrate_records_and_times():
    plan = SimPlan("zeroth", 0.1, 1.05, 1.0, record_every=3)
    tr = integrate(lambda s: (s.v, np.zeros(1)), State(0, [0.0], [1.0]), plan)
    assert np.allclose(tr.t, [0, 0.3, 0.6, 0.9, 1.05])
    assert tr.q[-1, 0] == pytest.approx(1.05, abs=1e-12)
    assert isinstance(tr[0], State) and tr.final.t == pytest.approx(1.05)


def test_integrate_guards(disk):
    with pytest.raises(StepTooLargeForStiffness):
        integrate(model_rhs(disk, "full"), State(0, Q0, UNIT), SimPlan("full", disk.epsilon, 1.0, disk.epsilon))
    with pytest.raises(NonFiniteState), np.errstate(over="ignore"):
        integrate(lambda s: (np.zeros(1), s.v**2), State(0, [0.0], [1e200]), SimPlan("zeroth", 0.1, 1.0, 1.0))


def test_kernel_nonfinite_guard(disk):
    big = State(0, Q0, [1e300, 1e300, 1e300, 1e300])
    with pytest.raises(NonFiniteState):
        simulate(disk, big, SimPlan("first", 0.1, 1.0, 1.0), backend="kernel")


def test_zeroth_circle(disk):
    plan = SimPlan("zeroth", 1e-3, np.pi, disk.epsilon, record_every=10)
    for backend in ("kernel", "generic"):
        tr = simulate(disk, State(0, Q0, UNIT), plan, backend=backend)
        assert np.abs(tr.q[:, 1] - np.sin(tr.t)).max() <= 1e-8
        assert np.abs(tr.q[:, 2] - (1 - np.cos(tr.t))).max() <= 1e-8
        assert tr.t[-1] == np.pi


@pytest.mark.parametrize("model", ["full", "zeroth", "first"])
def test_backends_agree(disk, model):
    o = disk.oracle
    v0 = o.vD(0.2, 1.1, -0.7) + o.slip(0.2, 1.1, -0.7, 2)
    plan = SimPlan(model, disk.epsilon / 40, 0.05, disk.epsilon, record_every=7)
    a = simulate(disk, State(0, [0.2, 0, 0, 0], v0), plan, backend="kernel")
    b = simulate(disk, State(0, [0.2, 0, 0, 0], v0), plan, backend="generic")
    assert np.array_equal(a.t, b.t)
    assert np.abs(a.q - b.q).max() <= 1e-12 and np.abs(a.v - b.v).max() <= 1e-10


def test_simulate_uses_plan_epsilon(disk):
    plan = SimPlan("full", 0.001, 0.01, 0.05)
    a = simulate(disk, State(0, Q0, [0, 1, 0, 0]), plan, backend="generic")
    b = simulate(disk.with_epsilon(0.05), State(0, Q0, [0, 1, 0, 0]), plan, backend="generic")
    assert np.array_equal(a.v, b.v)


def test_kernel_backend_rejects_other_systems(sleigh):
    with pytest.raises(InvalidParams):
        simulate(sleigh, State(0, np.zeros(3), np.zeros(3)), SimPlan("zeroth", 0.1, 0.2, 0.1), backend="kernel")


def test_energy_examples(disk, disk01):
    assert kinetic_energy(disk, Q0, UNIT) == pytest.approx(1.25)
    assert dissipation_rate(disk, Q0, UNIT) == pytest.approx(0.0, abs=1e-14)
    assert dissipation_rate(disk01, Q0, [0, 1, 0, 0]) == pytest.approx(-10.0)


def test_dissipation_nonpositive_zero_on_distribution(rng):
    s = sleigh_system()
    for _ in range(30):
        q, v = rng.normal(size=(2, 3))
        assert dissipation_rate(s, q, v) <= 1e-12
        assert abs(dissipation_rate(s, q, point_data(s, q).P @ v)) <= 1e-10


def test_energy_laws_disk(disk):
    o = disk.oracle
    tr = simulate(disk, State(0, Q0, UNIT), SimPlan("zeroth", 1e-3, 10.0, disk.epsilon))
    ke = np.array([kinetic_energy(disk, q, v) for q, v in zip(tr.q, tr.v)])
    assert np.abs(ke - ke[0]).max() <= 1e-8
    assert max(np.abs(disk.constraints.value(q) @ v).max() for q, v in zip(tr.q, tr.v)) <= 1e-7
    assert np.abs(tr.v[:, 3] - tr.v[0, 3]).max() <= 1e-10
    v0 = UNIT + np.array([0, 0.3, -0.2, 0.1])
    tr = simulate(disk, State(0, Q0, v0), SimPlan("full", disk.epsilon / 50, 1.0, disk.epsilon))
    ke = np.array([kinetic_energy(disk, q, v) for q, v in zip(tr.q, tr.v)])
    assert np.diff(ke).max() <= 1e-9
    for model in ("full", "zeroth", "first"):
        tr = simulate(disk, State(0, Q0, v0), SimPlan(model, disk.epsilon / 50, 1.0, disk.epsilon))
        assert np.abs(tr.v[:, 0] - tr.v[0, 0]).max() <= 1e-10


def test_energy_monotone_sleigh_generic():
    s = sleigh_system(epsilon=0.1)
    q0 = np.array([0.0, 0.0, 0.3])
    v0 = np.array([0.5, 0.8, -1.0])
    tr = simulate(s, State(0, q0, v0), SimPlan("full", 0.005, 1.0, 0.1))
    ke = np.array([kinetic_energy(s, q, v) for q, v in zip(tr.q, tr.v)])
    assert np.diff(ke).max() <= 1e-9


def test_zeroth_sleigh_conserves_energy_and_constraint():
    s = sleigh_system()
    q0 = np.array([0.0, 0.0, 0.3])
    v0 = point_data(s, q0).P @ np.array([1.0, 0.5, 0.8])
    tr = simulate(s, State(0, q0, v0), SimPlan("zeroth", 1e-3, 1.0, s.epsilon, record_every=50))
    ke = np.array([kinetic_energy(s, q, v) for q, v in zip(tr.q, tr.v)])
    assert np.abs(ke - ke[0]).max() <= 1e-8
    assert max(np.abs(s.constraints.value(q) @ v).max() for q, v in zip(tr.q, tr.v)) <= 1e-7


def test_attractivity(disk):
    o = disk.oracle
    eps = disk.epsilon
    v0 = o.Dperp_frame(0.0) @ np.array([1.0, -0.5])
    tr = simulate(disk, State(0, Q0, v0), SimPlan("full", eps / 50, 20 * eps, eps))
    assert slip_norm(disk, tr.q[-1], tr.v[-1]) < 1e-6


def test_slip_magnitude_order():
    """Full-model slip minus eps*h1 is O(eps^2) after the transient."""
    errs = []
    epsilons = [0.02, 0.01, 0.005]
    for eps in epsilons:
        s = disk_system(DiskParams(epsilon=eps))
        o = s.oracle
        tr = simulate(s, State(0, Q0, UNIT + o.slip(0, 1, 1, 2)), SimPlan("full", eps / 50, 1.0, eps))
        keep = tr.t >= 10 * eps
        e = 0.0
        for q, v in zip(tr.q[keep], tr.v[keep]):
            w = o.P(q[0]) @ v
            e = max(e, np.abs(o.P_perp(q[0]) @ v - eps * o.h1(q[0], w[0], w[3])).max())
        errs.append(e)
    slope = np.polyfit(np.log(epsilons), np.log(errs), 1)[0]
    assert abs(slope - 2.0) <= 0.3


def test_first_order_error_is_second_order():
    """Only the sign-corrected first-order model reaches O(eps^2) accuracy against the full model."""
    res = run_sweep(SweepSpec(DiskParams(), (0.02, 0.01, 0.005), (0, 1)))
    slopes = {f.order: f.slope for f in res.fits}
    assert abs(slopes[0] - 1.0) < 0.2 and abs(slopes[1] - 2.0) < 0.3


def test_config_error():
    t = np.array([0.0, 0.1, 0.2, 0.3])
    a = Trajectory(t, np.zeros((4, 2)), np.zeros((4, 2)))
    qb = np.zeros((4, 2))
    qb[0] = 5.0
    qb[3, 1] = -0.25
    b = dataclasses.replace(a, q=qb)
    assert config_error(a, b) == 5.0
    assert config_error(a, b, skip=0.1) == 0.25
    assert config_error(a, a) == 0.0
