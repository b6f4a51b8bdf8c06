"""One test per acceptance criterion, each at its stated tolerance.

Every test prints a single ``[acceptance] criterion N: PASS|FAIL`` line with the
measured quantities.
"""
import numpy as np
import pytest
import yaml

from nhslip.cli import main
from nhslip.constraints import point_data, projections
from nhslip.dynamics import SimPlan, State, kinetic_energy, simulate, slip_norm
from nhslip.slow_manifold import generating_residual, h1, h2
from nhslip.studies import SweepSpec, run_sweep
from nhslip.systems import DiskParams, disk_system
from nhslip.validation import classical_friction_force, covariant_friction_force, sample_disk_states

PARAMS = DiskParams(m=1.0, I=1.0, J=0.5, R=1.0, mu=1.0, epsilon=0.01)


def emit(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[acceptance] criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")
    assert ok, detail


def maxabs(M):
    return float(np.abs(M).max())


@pytest.fixture(scope="module")
def disk():
    return disk_system(PARAMS)


@pytest.fixture(scope="module")
def configs():
    return sample_disk_states(np.random.default_rng(2024), 200)


@pytest.fixture(scope="module")
def states():
    return sample_disk_states(np.random.default_rng(99), 100)


def test_criterion_01_projection_algebra(disk, configs, capsys):
    worst = {}
    for q, _, _ in configs:
        pp = projections(disk.metric, disk.constraints, disk.friction, q)
        G, A, P, Pp = disk.metric.value(q), disk.constraints.value(q), pp.P, pp.P_perp
        for name, M in [("P^2-P", P @ P - P), ("Pp^2-Pp", Pp @ Pp - Pp), ("P Pp", P @ Pp),
                        ("P+Pp-I", P + Pp - np.eye(4)), ("A P", A @ P), ("P^T G-G P", P.T @ G - G @ P),
                        ("FR P", pp.FR_sharp @ P)]:
            worst[name] = max(worst.get(name, 0.0), maxabs(M))
    ok = all(v <= 1e-10 for v in worst.values())
    emit(capsys, 1, ok, "max defects " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + " (tol 1e-10)")


def test_criterion_02_q_map_identity(disk, configs, capsys):
    worst = 0.0
    for q, _, _ in configs:
        pp = projections(disk.metric, disk.constraints, disk.friction, q)
        worst = max(worst, maxabs(pp.Q @ pp.FR_sharp - pp.P_perp))
    emit(capsys, 2, worst <= 1e-10, f"max |Q FR - P_perp| = {worst:.1e} (tol 1e-10)")


def test_criterion_03_oracle_equivalence(disk, states, capsys):
    """Compared against the closed forms as usually quoted; h2 there has the opposite sign."""
    o = disk.oracle
    disk_fd = disk_system(PARAMS, analytic=False)
    mat = h1d = h2a = h2f = h2a_corr = h2f_corr = 0.0
    for q, vt, vp in states:
        th = q[0]
        pp = projections(disk.metric, disk.constraints, disk.friction, q)
        mat = max(mat, maxabs(pp.P - o.P(th)), maxabs(pp.P_perp - o.P_perp(th)), maxabs(pp.FR_sharp - o.FR_sharp(th)))
        w = o.vD(th, vt, vp)
        h1d = max(h1d, maxabs(h1(disk, q, w) - o.h1(th, vt, vp)))
        ga, gf = h2(disk, q, w), h2(disk_fd, q, w)
        h2a = max(h2a, maxabs(ga - o.h2_printed(th, vt, vp)))
        h2f = max(h2f, maxabs(gf - o.h2_printed(th, vt, vp)))
        h2a_corr = max(h2a_corr, maxabs(ga - o.h2(th, vt, vp)))
        h2f_corr = max(h2f_corr, maxabs(gf - o.h2(th, vt, vp)))
    ok = mat <= 1e-10 and h1d <= 1e-8 and h2a <= 1e-8 and h2f <= 1e-5
    emit(capsys, 3, ok,
         f"matrices {mat:.1e} (1e-10); h1 {h1d:.1e} (1e-8); h2 vs quoted closed form: analytic {h2a:.2e} (1e-8), "
         f"fd {h2f:.2e} (1e-5); h2 vs sign-flipped closed form: analytic {h2a_corr:.1e}, fd {h2f_corr:.1e} "
         f"[sign of the quoted h2 is contradicted by stiff simulation; see README]")


def test_criterion_04_zeroth_is_nonholonomic(disk, capsys):
    v0 = disk.oracle.vD(0.0, 1.0, 1.0)
    tr = simulate(disk, State(0.0, np.zeros(4), v0), SimPlan("zeroth", 1e-3, np.pi, disk.epsilon))
    circle = max(maxabs(tr.q[:, 1] - np.sin(tr.t)), maxabs(tr.q[:, 2] - (1 - np.cos(tr.t))))
    ke = np.array([kinetic_energy(disk, q, v) for q, v in zip(tr.q, tr.v)])
    drift = maxabs(ke - ke[0])
    tang = max(maxabs(disk.constraints.value(q) @ v) for q, v in zip(tr.q, tr.v))
    ok = circle <= 1e-6 and drift <= 1e-8 and tang <= 1e-7 and tr.t[-1] == np.pi
    emit(capsys, 4, ok, f"circle error {circle:.1e} (1e-6); KE drift {drift:.1e} (1e-8); |A v| {tang:.1e} (1e-7)")


def test_criterion_05_force_equivalence(disk, states, capsys):
    hmap = disk.oracle.slip_map(2)
    worst = 0.0
    for q, vt, vp in states:
        w = disk.oracle.vD(q[0], vt, vp)
        v = w + hmap.value(q, w)
        a = classical_friction_force(disk, q, v, hmap)
        b = covariant_friction_force(disk, q, v, hmap)
        worst = max(worst, float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b))))
    emit(capsys, 5, worst <= 1e-8, f"max relative difference {worst:.1e} (tol 1e-8)")


def test_criterion_06_generating_residual_order(disk, states, capsys):
    eps_grid = (0.04, 0.02, 0.01)
    fixed = states[:20]
    errs = []
    for eps in eps_grid:
        s = disk.with_epsilon(eps)
        hmap = s.oracle.slip_map(2)
        errs.append(max(maxabs(generating_residual(s, q, s.oracle.vD(q[0], vt, vp), hmap)) for q, vt, vp in fixed))
    slope = float(np.polyfit(np.log(eps_grid), np.log(errs), 1)[0])
    emit(capsys, 6, abs(slope - 3.0) <= 0.3,
         f"slope {slope:.3f} (3.0 +- 0.3) over eps {eps_grid}; sup residuals " + ", ".join(f"{e:.2e}" for e in errs))


def test_criterion_07_trajectory_convergence(capsys):
    spec = SweepSpec(PARAMS, (0.02, 0.01, 0.005, 0.0025), (0, 1), t_final=1.0, steps_per_epsilon=50,
                     transient_epsilons=10.0, v_theta=1.0, v_phi=1.0, slip_order=2)
    res = run_sweep(spec)
    s0, s1 = (f.slope for f in res.fits)
    ok = abs(s0 - 1.0) <= 0.2 and abs(s1 - 2.0) <= 0.3
    emit(capsys, 7, ok, f"zeroth vs full slope {s0:.3f} (1.0 +- 0.2); first vs full slope {s1:.3f} (2.0 +- 0.3)")


def test_criterion_08_dissipation_and_attractivity(disk, capsys):
    eps = disk.epsilon
    o = disk.oracle
    rises = 0.0
    for th, vt, vp, kick in [(0.0, 1.0, 1.0, (0.3, -0.2)), (1.1, -0.7, 1.9, (0.0, 0.5)), (4.0, 2.0, -1.0, (-1.0, 1.0))]:
        v0 = o.vD(th, vt, vp) + o.Dperp_frame(th) @ np.array(kick)
        tr = simulate(disk, State(0.0, [th, 0, 0, 0], v0), SimPlan("full", eps / 50, 1.0, eps))
        ke = np.array([kinetic_energy(disk, q, v) for q, v in zip(tr.q, tr.v)])
        rises = max(rises, float(np.diff(ke).max()))
    v0 = o.Dperp_frame(0.0) @ np.array([1.0, 1.0])
    tr = simulate(disk, State(0.0, np.zeros(4), v0), SimPlan("full", eps / 50, 20 * eps, eps))
    Pp_v = np.linalg.norm(projections(disk.metric, disk.constraints, disk.friction, tr.q[-1]).P_perp @ tr.v[-1])
    ok = rises <= 1e-9 and Pp_v < 1e-6
    emit(capsys, 8, ok, f"max KE increase {rises:.1e} (<= 1e-9 slack); |P_perp v|(20 eps) = {Pp_v:.1e} (< 1e-6); "
                        f"G-norm {slip_norm(disk, tr.q[-1], tr.v[-1]):.1e}")


def test_criterion_09_v_theta_conserved(disk, capsys):
    o = disk.oracle
    v0 = o.vD(0.3, 1.0, 1.0) + o.slip(0.3, 1.0, 1.0, 2)
    drift = {}
    for model in ("full", "zeroth", "first"):
        tr = simulate(disk, State(0.0, [0.3, 0, 0, 0], v0), SimPlan(model, disk.epsilon / 50, 1.0, disk.epsilon))
        drift[model] = maxabs(tr.v[:, 0] - tr.v[0, 0])
    ok = all(d <= 1e-10 for d in drift.values())
    emit(capsys, 9, ok, "v_theta drift " + ", ".join(f"{k}={v:.1e}" for k, v in drift.items()) + " (tol 1e-10)")


def test_criterion_10_determinism(tmp_path, capsys):
    tree = {
        "system": {"kind": "vertical-disk", "params": {"m": 1, "I": 1, "J": 0.5, "R": 1, "mu": 1}},
        "sim": {"t_final": 1.0},
        "sweep": {"epsilons": [0.02, 0.01, 0.005, 0.0025], "orders": [0, 1]},
        "initial": {"v_theta": 1.0, "v_phi": 1.0, "slip_order": 2},
    }
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text(yaml.safe_dump(tree))
    outs = []
    for jobs in (1, 4, 1):
        out = tmp_path / f"conv_{jobs}_{len(outs)}.csv"
        assert main(["convergence", "--config", str(cfg), "--out", str(out), "--jobs", str(jobs)]) == 0
        outs.append(out.read_bytes())
    capsys.readouterr()
    ok = outs[0] == outs[1] == outs[2]
    emit(capsys, 10, ok, f"--jobs 1 / --jobs 4 / --jobs 1 CSVs byte-identical: {ok} ({len(outs[0])} bytes)")
