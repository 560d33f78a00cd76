"""Timing comparison of the two kernel backends on realistic workloads.

Builds the monomial family of half the chain and a Gibbs density, then
times each hot kernel through the pure-Python backend and (when built) the
compiled one.  Run as a script:

    python3 benchmarks/bench_kernels.py --length 8 --repeats 7
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fermichain import _kernels_py
from fermichain import car
from fermichain.potentials import hopping_model, total_hamiltonian
from fermichain.regions import Region
from fermichain.states import gibbs_state

try:
    from fermichain import _kernels_cy
except ImportError:
    _kernels_cy = None


def best_of(repeats: int, fn, *args) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def workloads(length: int):
    half = Region.of(range(length // 2), length)
    other = half.complement()
    inner = car.monomial_basis(half)
    outer = car.monomial_basis(other)
    density = gibbs_state(total_hamiltonian(hopping_model(length)), 1.0).density
    density = np.ascontiguousarray(density)
    coeffs = np.ascontiguousarray(inner.expectations(density))
    return [
        ("compose_batch", f"{len(inner)}x{density.shape[0]}",
         lambda k: k.compose_batch(inner.P, inner.V, outer.P[1], outer.V[1])),
        ("trace_batch", f"{len(inner)}x{density.shape[0]}",
         lambda k: k.trace_batch(inner.P, inner.V)),
        ("expect_batch", f"{len(inner)}x{density.shape[0]}",
         lambda k: k.expect_batch(inner.P, inner.V, density)),
        ("inner_batch", f"{len(inner)}x{density.shape[0]}",
         lambda k: k.inner_batch(inner.P, inner.V, density)),
        ("scatter", f"{len(inner)}x{density.shape[0]}",
         lambda k: k.scatter(inner.P, inner.V, coeffs)),
        ("pair_expect", f"{len(inner)}x{len(outer)}",
         lambda k: k.pair_expect(inner.P, inner.V, outer.P, outer.V, density)),
    ]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--length", type=int, default=8,
                        help="chain length (default 8)")
    parser.add_argument("--repeats", type=int, default=7,
                        help="repetitions, best taken (default 7)")
    args = parser.parse_args()

    print(f"chain length {args.length}, best of {args.repeats}")
    header = f"{'kernel':<14} {'shape':<12} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, shape, call in workloads(args.length):
        py = best_of(args.repeats, call, _kernels_py)
        if _kernels_cy is None:
            print(f"{name:<14} {shape:<12} {py * 1e3:>8.2f}ms {'n/a':>10} {'':>8}")
            continue
        cy = best_of(args.repeats, call, _kernels_cy)
        print(f"{name:<14} {shape:<12} {py * 1e3:>8.2f}ms {cy * 1e3:>8.2f}ms "
              f"{py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
