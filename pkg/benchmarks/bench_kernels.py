#!/usr/bin/env python3
"""Benchmark the compiled iteration kernels against the pure-Python fallback.

Two workloads dominated by the hot inner loop:

* orbit  -- a single long orbit of the maximal perturbed-PPI map;
* sweep  -- a bifurcation sweep (thousands of shorter orbits in lockstep).

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from revdyn import (
    build_update_map,
    eta_max_perturbed,
    game_with_equilibrium,
    perturbed_ppi_protocol,
    xi_max_perturbed,
)
from revdyn.kernels import backends


def time_call(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    orbit_steps = 200_000 if args.quick else 2_000_000
    sweep_deltas = 100 if args.quick else 500
    transient, keep = (2_000, 50) if args.quick else (20_000, 100)

    g = game_with_equilibrium(0.4)
    prot = perturbed_ppi_protocol(g, eta_max_perturbed(g), xi_max_perturbed(g))
    m = build_update_map(prot, 0.97)
    disp = prot.displacement
    deltas = np.linspace(0.05, 1.0, sweep_deltas)
    seeds = np.array([0.2, 0.7])

    impls = backends()
    if "c" not in impls:
        print("note: compiled kernels not built; timing the fallback only")

    workloads = {
        f"orbit ({orbit_steps:,} steps)": lambda impl: impl.iterate_map(
            m.poly.breakpoints, m.poly.coeffs, 0.31, orbit_steps
        ),
        f"sweep ({sweep_deltas} deltas x 2 seeds x {transient + keep:,} steps)":
            lambda impl: impl.sweep(
                disp.breakpoints, disp.coeffs, deltas, seeds, transient, keep
            ),
    }

    print(f"{'workload':<52} " + " ".join(f"{name:>12}" for name in impls))
    rows = {}
    for label, runner in workloads.items():
        times = {name: time_call(lambda i=impl: runner(i)) for name, impl in impls.items()}
        rows[label] = times
        cells = " ".join(f"{times[name]:>11.3f}s" for name in impls)
        print(f"{label:<52} {cells}")
    if "c" in impls and "python" in impls:
        for label, times in rows.items():
            speedup = times["python"] / times["c"]
            print(f"speedup ({label}): {speedup:.1f}x")


if __name__ == "__main__":
    main()
