#!/usr/bin/env python3
"""Benchmark the closed-loop integrator kernel: numba vs pure-numpy path.

Runs the same workload (raw feedback law on the 5-level preset) in two
subprocesses, one with numba enabled and one with LYAPSIM_NO_NUMBA=1, and
reports per-step timings and the speedup. The first numba call pays JIT
compilation; a warmup run is excluded from the timing.

Usage: python benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def run_workload(steps: int, repeat: int) -> dict:
    import numpy as np

    from lyapsim import _kernels, preset_5dim, random_initial_state, derive_rng

    sys5 = preset_5dim()
    psi0 = random_initial_state(5, derive_rng(7, 0, 0))
    args = (
        sys5.h0,
        sys5.h1,
        sys5.target,
        sys5.h1_target(),
        sys5.gain_k,
        psi0,
        steps,
        0.01,
        _kernels.LAW_FEEDBACK,
        0,
        0.0,
        np.empty(0),
        1,
        0.0,
        0.0,
        1e-6,
    )
    _kernels.simulate_loop(*args[:6], 100, *args[7:])  # warmup / JIT
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        states, fields, status, _ = _kernels.simulate_loop(*args)
        best = min(best, time.perf_counter() - t0)
    assert status == 0
    return {
        "numba": _kernels.USING_NUMBA,
        "seconds": best,
        "us_per_step": 1e6 * best / steps,
        "final_fidelity": float(abs(np.vdot(sys5.target, states[-1])) ** 2),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(run_workload(args.steps, args.repeat)))
        return 0

    results = {}
    for label, no_numba in (("numba", ""), ("numpy", "1")):
        env = dict(os.environ)
        env["LYAPSIM_NO_NUMBA"] = no_numba
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", "--steps", str(args.steps),
             "--repeat", str(args.repeat)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])

    if not results["numba"]["numba"]:
        print("note: numba unavailable; both rows ran the pure-numpy path")
    print(f"workload: {args.steps} RK4 feedback steps, 5-level preset, best of {args.repeat}")
    print(f"{'path':<8} {'seconds':>10} {'us/step':>10}")
    for label in ("numba", "numpy"):
        r = results[label]
        print(f"{label:<8} {r['seconds']:>10.4f} {r['us_per_step']:>10.2f}")
    speedup = results["numpy"]["seconds"] / results["numba"]["seconds"]
    print(f"speedup: {speedup:.1f}x")
    df = abs(results["numba"]["final_fidelity"] - results["numpy"]["final_fidelity"])
    print(f"final-fidelity agreement: |diff| = {df:.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
