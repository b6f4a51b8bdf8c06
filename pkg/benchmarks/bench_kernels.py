"""Compare the compiled disk kernel, its pure-Python fallback and the generic pipeline.

Usage: python benchmarks/bench_kernels.py [--steps N]
"""
import argparse
import time

import numpy as np

from nhslip import _kernels_py, kernels
from nhslip.dynamics import MODELS, SimPlan, State, simulate
from nhslip.systems import DiskParams, disk_system


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--generic-steps", type=int, default=200)
    args = ap.parse_args()

    p = DiskParams(epsilon=0.0025)
    params = (p.m, p.I, p.J, p.R, p.mu, p.epsilon)
    system = disk_system(p)
    o = system.oracle
    y0 = np.concatenate([np.zeros(4), o.vD(0.0, 1.0, 1.0) + o.slip(0.0, 1.0, 1.0, 2)])
    dt = p.epsilon / 50
    compiled = kernels.compiled_module()

    print(f"backend selected at import: {kernels.BACKEND}")
    print(f"{'model':8s} {'impl':10s} {'steps':>7s} {'us/step':>10s} {'speedup':>8s}")
    for code, model in enumerate(MODELS):
        t_py, rows_py = _time(lambda: _kernels_py.disk_rk4(code, y0, params, dt, args.steps, args.steps))
        print(f"{model:8s} {'python':10s} {args.steps:7d} {1e6 * t_py / args.steps:10.3f} {1.0:8.1f}")
        if compiled is not None:
            t_c, rows_c = _time(lambda: compiled.disk_rk4(code, y0, params, dt, args.steps, args.steps))
            same = np.array_equal(rows_c, rows_py)
            print(f"{model:8s} {'cython':10s} {args.steps:7d} {1e6 * t_c / args.steps:10.3f} "
                  f"{t_py / t_c:8.1f}  identical={same}")
        n = args.generic_steps
        plan = SimPlan(model, dt, n * dt, p.epsilon, record_every=n)
        state = State(0.0, y0[:4], y0[4:])
        t_g, _ = _time(lambda: simulate(system, state, plan, backend="generic"), repeat=1)
        print(f"{model:8s} {'generic':10s} {n:7d} {1e6 * t_g / n:10.3f} {t_py / args.steps / (t_g / n):8.3f}")


if __name__ == "__main__":
    main()
