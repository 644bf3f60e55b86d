#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Times the three hot kernels (4x4 Hermitian eigensolver, unitary synthesis,
attack objective) and one end-to-end strategy optimization per backend.

Run:  python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from detqkd._kernels import available_backends
from detqkd.adversary import signal_ensemble, wrong_click_stack
from detqkd.schemes import k_scheme


def time_call(fn, repeats: int) -> float:
    """Best-of-three average seconds per call."""
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def bench_backend(mod, repeats: int) -> dict[str, float]:
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = (x + x.conj().T) / 2
    theta = rng.uniform(-2, 2, 16)

    scheme = k_scheme(1.0)
    _, signals, priors = signal_ensemble(scheme)
    ops = np.ascontiguousarray(wrong_click_stack(scheme))
    signals = np.ascontiguousarray(signals)

    return {
        "eigh4": time_call(lambda: mod.eigh4(h), repeats),
        "unitary_from_params": time_call(lambda: mod.unitary_from_params(theta), repeats),
        "strategy_objective": time_call(
            lambda: mod.strategy_objective(theta, signals, priors, ops), repeats
        ),
    }


def bench_optimize(backend_name: str) -> tuple[float, float]:
    """One 8-restart optimization at k=1 under the given backend."""
    import importlib
    import os

    # select the backend through the environment and a fresh import
    env_before = os.environ.get("DETQKD_PURE_KERNELS")
    os.environ["DETQKD_PURE_KERNELS"] = "1" if backend_name == "pure" else ""
    if not os.environ["DETQKD_PURE_KERNELS"]:
        del os.environ["DETQKD_PURE_KERNELS"]
    import detqkd._kernels as kernels

    importlib.reload(kernels)
    import detqkd.adversary as adversary

    importlib.reload(adversary)
    from detqkd.rng import RandomStream

    start = time.perf_counter()
    report = adversary.optimize_strategy(
        k_scheme(1.0), restarts=8, tolerance=1e-6, rng=RandomStream(2026)
    )
    elapsed = time.perf_counter() - start

    if env_before is None:
        os.environ.pop("DETQKD_PURE_KERNELS", None)
    else:
        os.environ["DETQKD_PURE_KERNELS"] = env_before
    importlib.reload(kernels)
    importlib.reload(adversary)
    return elapsed, report.p_min


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    backends = available_backends()
    results = {name: bench_backend(mod, args.repeats) for name, mod in backends.items()}

    kernels_order = ["eigh4", "unitary_from_params", "strategy_objective"]
    print(f"{'kernel':<24}" + "".join(f"{name:>14}" for name in results) + f"{'speedup':>10}")
    for kernel in kernels_order:
        row = f"{kernel:<24}"
        for name in results:
            row += f"{results[name][kernel] * 1e6:>12.1f}us"
        if len(results) == 2:
            ratio = results["pure"][kernel] / results["compiled"][kernel]
            row += f"{ratio:>9.1f}x"
        print(row)

    print()
    for name in backends:
        elapsed, p_min = bench_optimize(name)
        print(f"optimize k=1, 8 restarts [{name:>8}]: {elapsed:6.2f}s  p_min={p_min:.8f}")


if __name__ == "__main__":
    main()
