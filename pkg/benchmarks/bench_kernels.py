"""Compiled splitting kernel versus the NumPy fallback.

Times ``dc_update`` (resolvent root per element plus multiplier update) on
random fields of adaptive-mesh size, then one full splitting solve with each
backend.  Run with ``python3 benchmarks/bench_kernels.py``.
"""

import argparse
import timeit

import numpy as np

from crplap import _fallback, kernels
from crplap.assembly import CRSystem
from crplap.mesh import make_unit_square_mesh
from crplap.plap import DCConfig, decomposition_coordination


def bench_update(impl, m, p, repeat):
    rng = np.random.default_rng(0)
    xi = rng.uniform(-1.0, 1.0, (m, 2))
    grad = rng.uniform(-1.0, 1.0, (m, 2))
    return min(timeit.repeat(lambda: impl.dc_update(xi, grad, p), number=1, repeat=repeat))


def bench_solve(impl, n, p):
    saved = kernels.dc_update
    kernels.dc_update = impl.dc_update
    try:
        system = CRSystem(make_unit_square_mesh(n))
        t = timeit.default_timer()
        state = decomposition_coordination(system, 1.0, p, DCConfig())
        return timeit.default_timer() - t, state.iterations
    finally:
        kernels.dc_update = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=64, help="grid for the full solve")
    args = ap.parse_args()
    if kernels.BACKEND != "compiled":
        print("compiled extension not built; only the fallback is available")
        return
    compiled = kernels._impl
    print(f"{'p':>5} {'elements':>9} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8}")
    for p in (1.2, 1.5, 2.5, 10.0):
        for m in (10_000, 100_000, 500_000):
            a = bench_update(_fallback, m, p, args.repeat)
            b = bench_update(compiled, m, p, args.repeat)
            print(f"{p:5g} {m:9d} {1e3 * a:11.2f} {1e3 * b:12.2f} {a / b:8.1f}")
    print()
    print(f"full splitting solve, {args.n}x{args.n} square, f = 1")
    for p in (1.5, 2.5):
        ta, it = bench_solve(_fallback, args.n, p)
        tb, _ = bench_solve(compiled, args.n, p)
        print(f"p={p:g}: {it} iterations, numpy {ta:.2f} s, cython {tb:.2f} s, speedup {ta / tb:.1f}")


if __name__ == "__main__":
    main()
