#!/usr/bin/env python3
"""Benchmark the jitted RK4 integrator against the pure numpy baseline.

Runs the same seeded instance through both backends, checks that the
trajectories agree, and reports median wall-clock times and the speedup.

Usage:
    python benchmarks/bench_integrate.py [--m M] [--steps N] [--iters I]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from kostant_toda import (
    HAS_NUMBA,
    IntegratorConfig,
    integrate,
    random_state,
    set_backend,
)


def run_once(state, cfg):
    traj = integrate(state, cfg)
    return traj.samples


def time_backend(name, state, cfg, iters):
    set_backend(name)
    samples = run_once(state, cfg)  # warm-up (jit compile on first call)
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        run_once(state, cfg)
        times.append(time.perf_counter() - t0)
    return samples, float(np.median(times))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=32, help="lattice size")
    ap.add_argument("--steps", type=int, default=20000, help="RK4 steps")
    ap.add_argument("--h", type=float, default=1e-4, help="step size")
    ap.add_argument("--iters", type=int, default=5, help="timed repetitions")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    state = random_state(args.seed, args.m)
    cfg = IntegratorConfig(t_end=args.steps * args.h, h=args.h)
    print(f"m={args.m} steps={args.steps} h={args.h:g} iters={args.iters}")

    ref, t_numpy = time_backend("numpy", state, cfg, args.iters)
    print(f"numpy : {t_numpy * 1e3:9.2f} ms")

    if not HAS_NUMBA:
        print("numba : not installed, skipping")
        return

    samples, t_numba = time_backend("numba", state, cfg, args.iters)
    diff = float(np.max(np.abs(samples - ref)))
    print(f"numba : {t_numba * 1e3:9.2f} ms   (max |diff| vs numpy = {diff:.3e})")
    print(f"speedup: {t_numpy / t_numba:.1f}x")


if __name__ == "__main__":
    main()
