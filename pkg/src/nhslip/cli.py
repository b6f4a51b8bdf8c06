"""Command-line front end: ``nhslip {simulate,slip,convergence,validate}``.

Configs are YAML files with the blocks ``system``, ``sim``, ``sweep`` and
``initial`` (see README). Every command except ``slip`` prints a JSON run report
on stdout. Exit codes: 0 success, 1 usage error, 2 validation or guard failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .dynamics import SimPlan, State, kinetic_energy, simulate, slip_norm
from .errors import NHSlipError, SchemaError
from .slow_manifold import h1, h2, slip
from .systems import _get, _number, disk_state_from_config, load_system
from .studies import SweepSpec, run_sweep
from .validation import FAULTS, first_failure, run_validation

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

SIM_COLUMNS = ["t", "theta", "x", "y", "phi", "v_theta", "v_x", "v_y", "v_phi", "ke", "slip_norm"]
EXPECTED_SLOPES = {0: (1.0, 0.2), 1: (2.0, 0.3)}


class UsageError(Exception):
    pass


@dataclass
class RunReport:
    command: str
    config_digest: str = ""
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(self.flags.values())

    def to_json(self) -> str:
        body = {
            "command": self.command,
            "config_digest": self.config_digest,
            "outputs": self.outputs,
            "summary": self.summary,
            "flags": self.flags,
            "passed": self.passed,
        }
        if self.error is not None:
            body["error"] = self.error
        return json.dumps(body, indent=2, sort_keys=True)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# io helpers ----------------------------------------------------------------

def fmt(x) -> str:
    return format(float(x), ".17g")


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(c if isinstance(c, str) else fmt(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        tree = yaml.safe_load(raw) or {}
    except yaml.YAMLError as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(tree, dict):
        raise SchemaError("<root>", "config root must be a mapping")
    return tree, hashlib.sha256(raw).hexdigest()


def plan_from_config(tree) -> SimPlan:
    model = _get(tree, "sim.model", "full")
    record_every = _get(tree, "sim.record_every", 1)
    if isinstance(record_every, bool) or not isinstance(record_every, int):
        raise SchemaError("sim.record_every", "sim.record_every must be an integer")
    return SimPlan(
        model=model,
        dt=_number(tree, "sim.dt"),
        t_final=_number(tree, "sim.t_final"),
        epsilon=_number(tree, "sim.epsilon", 0.01),
        record_every=record_every,
        transient_skip=_number(tree, "sim.transient_skip", 0.0),
    )


# commands ------------------------------------------------------------------

def cmd_simulate(args, report: RunReport) -> None:
    tree, report.config_digest = load_config(args.config)
    system = load_system(tree)
    plan = plan_from_config(tree)
    q0, v0 = disk_state_from_config(tree, system)
    backend = _get(tree, "sim.backend", "auto")
    traj = simulate(system, State(0.0, q0, v0), plan, backend=backend)
    rows = []
    for t, q, v in zip(traj.t, traj.q, traj.v):
        rows.append([t, *q, *v, kinetic_energy(system, q, v), slip_norm(system, q, v)])
    out = args.out or "trajectory.csv"
    write_atomic(out, csv_text(SIM_COLUMNS, rows))
    report.outputs.append(out)
    last = rows[-1]
    report.summary = {
        "model": plan.model,
        "epsilon": plan.epsilon,
        "dt": plan.dt,
        "samples": len(rows),
        "t_final": last[0],
        "ke_initial": rows[0][9],
        "ke_final": last[9],
        "slip_norm_final": last[10],
    }


def cmd_slip(args, report: RunReport) -> str:
    tree, report.config_digest = load_config(args.config)
    system = load_system(tree)
    theta = args.theta if args.theta is not None else _number(tree, "initial.theta", 0.0)
    vt = args.v_theta if args.v_theta is not None else _number(tree, "initial.v_theta", 1.0)
    vp = args.v_phi if args.v_phi is not None else _number(tree, "initial.v_phi", 1.0)
    q = np.array([theta, _number(tree, "initial.x", 0.0), _number(tree, "initial.y", 0.0),
                  _number(tree, "initial.phi", 0.0)])
    w = system.oracle.vD(theta, vt, vp)
    s1 = h1(system, q, w)
    s2 = h2(system, q, w)
    total = slip(system, q, w, 2)
    header = [f"h1_{i}" for i in range(4)] + [f"h2_{i}" for i in range(4)] + [f"slip_{i}" for i in range(4)]
    text = csv_text(header, [[*s1, *s2, *total]])
    if args.out:
        write_atomic(args.out, text)
        report.outputs.append(args.out)
    return text


def sweep_from_config(tree, system) -> SweepSpec:
    eps = _get(tree, "sweep.epsilons")
    if not isinstance(eps, list) or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in eps):
        raise SchemaError("sweep.epsilons", "sweep.epsilons must be a list of numbers")
    orders = _get(tree, "sweep.orders", [0, 1])
    if not isinstance(orders, list):
        raise SchemaError("sweep.orders", "sweep.orders must be a list")
    return SweepSpec(
        params=system.oracle.p,
        epsilons=tuple(float(e) for e in eps),
        orders=tuple(orders),
        t_final=_number(tree, "sim.t_final", 1.0),
        steps_per_epsilon=int(_number(tree, "sweep.steps_per_epsilon", 50)),
        transient_epsilons=_number(tree, "sweep.transient_epsilons", 10.0),
        theta=_number(tree, "initial.theta", 0.0),
        v_theta=_number(tree, "initial.v_theta", 1.0),
        v_phi=_number(tree, "initial.v_phi", 1.0),
        slip_order=int(_number(tree, "initial.slip_order", 2)),
        backend=_get(tree, "sim.backend", "auto"),
    )


def cmd_convergence(args, report: RunReport) -> None:
    tree, report.config_digest = load_config(args.config)
    system = load_system(tree)
    spec = sweep_from_config(tree, system)
    result = run_sweep(spec, jobs=args.jobs)
    out = args.out or "convergence.csv"
    rows = [[fmt(e), str(o), fmt(err)] for e, o, err in result.rows]
    write_atomic(out, csv_text(["epsilon", "order", "error"], rows))
    report.outputs.append(out)
    report.summary = {
        "epsilons": list(spec.epsilons),
        "fits": [f.as_dict() for f in result.fits],
    }
    for f in result.fits:
        if f.order in EXPECTED_SLOPES:
            target, tol = EXPECTED_SLOPES[f.order]
            report.flags[f"slope_order_{f.order}"] = f.slope is not None and abs(f.slope - target) <= tol


def cmd_validate(args, report: RunReport) -> None:
    tree, report.config_digest = load_config(args.config)
    system = load_system(tree)
    results = run_validation(system, seed=args.seed, fault=args.inject_fault)
    report.summary = {"invariants": [r.as_dict() for r in results]}
    bad = first_failure(results)
    report.flags["all_invariants"] = bad is None
    if bad is not None:
        report.error = f"invariant failed: {bad.name} (defect {bad.defect:.3g} > tol {bad.tol:.3g})"


# entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="YAML config file")
    common.add_argument("--out", metavar="PATH", help="CSV output path")
    common.add_argument("--seed", type=int, default=0, help="seed for random-state sampling")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    parser = _Parser(prog="nhslip", description="Slip approximations for friction-realized rolling constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="integrate one model and write a trajectory CSV")
    p = sub.add_parser("slip", parents=[common], help="print h1, h2 and the order-2 slip at one state")
    p.add_argument("--theta", type=float)
    p.add_argument("--v-theta", dest="v_theta", type=float)
    p.add_argument("--v-phi", dest="v_phi", type=float)
    sub.add_parser("convergence", parents=[common], help="epsilon sweep of reduced-model errors")
    p = sub.add_parser("validate", parents=[common], help="run the invariant suites")
    p.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("nhslip: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    report = RunReport(args.command)
    try:
        if args.command == "slip":
            sys.stdout.write(cmd_slip(args, report))
            return EXIT_OK
        {"simulate": cmd_simulate, "convergence": cmd_convergence, "validate": cmd_validate}[args.command](
            args, report
        )
    except UsageError as exc:
        print(f"nhslip: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NHSlipError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
    if args.command != "slip":
        print(report.to_json())
    if report.error is not None:
        print(f"nhslip: {report.error}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
