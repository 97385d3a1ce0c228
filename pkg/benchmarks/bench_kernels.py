#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends on the bundled fixture.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the four hot kernels plus one full WLS estimation cell under each
backend and prints a per-call table with the speedup ratio.
"""

from __future__ import annotations

import argparse
import importlib
import os
import timeit

import numpy as np


def load_backend(name: str):
    os.environ["CRBSENSE_BACKEND"] = name
    import crbsense.kernels as kernels

    importlib.reload(kernels)
    return kernels


def build_problem():
    from crbsense import measmodel, netmodel, wls
    from crbsense.noise import DistributionSpec
    from crbsense.powerflow import solve_power_flow

    net = netmodel.bundled_network()
    y = netmodel.build_ybus(net)
    plan = measmodel.default_plan(net, sigma_seed=0)
    cp = measmodel.compile_plan(net, y, plan)
    sol = solve_power_flow(net, y, 1.0)
    z_true = cp.h(sol.state)
    variant = DistributionSpec("gaussian", 0.20)
    sigmas = measmodel.assumed_sigmas(plan, z_true, variant)
    library = measmodel.build_noise_library(plan, z_true, variant, sigmas=sigmas)
    z = measmodel.sample_measurements(
        plan, z_true, library, np.random.default_rng(0), sigmas=sigmas
    )
    w = wls.build_weights(sigmas)
    return net, y, cp, sol, z, w


def bench_backend(name: str, repeats: int) -> dict[str, float]:
    kernels = load_backend(name)
    from crbsense import wls

    net, y, cp, sol, z, w = build_problem()
    from crbsense.powerflow import full_voltages

    vm, va = full_voltages(net, sol.state)
    flow = (cp._flow_ib, cp._flow_jb, cp._flow_gs, cp._flow_bs, cp._flow_bsh)

    cases = {
        "bus_injections": lambda: kernels.bus_injections(y.g, y.b, vm, va),
        "injection_jacobian": lambda: kernels.injection_jacobian(y.g, y.b, vm, va),
        "branch_flows": lambda: kernels.branch_flows(vm, va, *flow),
        "branch_flow_jacobian": lambda: kernels.branch_flow_jacobian(vm, va, *flow),
        "wls_estimate": lambda: wls.estimate(cp, z, w),
    }
    out = {}
    for label, fn in cases.items():
        fn()  # warm-up (JIT compilation for the numba backend)
        n = max(repeats, 1)
        out[label] = timeit.timeit(fn, number=n) / n
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    results = {}
    for backend in ("numpy", "numba"):
        try:
            results[backend] = bench_backend(backend, args.repeats)
        except ImportError:
            print(f"backend {backend!r} unavailable, skipping")
    os.environ.pop("CRBSENSE_BACKEND", None)

    if len(results) < 2:
        for backend, rows in results.items():
            for label, t in rows.items():
                print(f"{backend:>6} {label:<22} {t * 1e6:10.2f} us")
        return 0

    print(f"{'kernel':<22} {'numpy (us)':>12} {'numba (us)':>12} {'speedup':>9}")
    for label in results["numpy"]:
        t_np = results["numpy"][label] * 1e6
        t_nb = results["numba"][label] * 1e6
        print(f"{label:<22} {t_np:12.2f} {t_nb:12.2f} {t_np / t_nb:8.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
