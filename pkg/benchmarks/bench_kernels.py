"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--nodes 400] [--steps 200]
"""

import argparse
import time

import numpy as np

from udbargain import _kernels_py
from udbargain.instance import generate_random_bipartite, generate_ring
from udbargain.rebalance import SolveConfig, solve

try:
    from udbargain import _kernels
except ImportError:
    _kernels = None


def _best_of(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rebalance(mod, inst, matching, gamma0, steps):
    a = inst.arrays
    partner, pw, rsplit = inst.matching_arrays(matching)

    def run():
        g = gamma0.copy()
        mod.rebalance_run(a.indptr, a.nbr, a.wt, partner, pw, rsplit, g, np.empty_like(g), 0.5, -1.0, steps, np.empty(steps))

    return _best_of(run)


def bench_bp(mod, inst, steps):
    a = inst.arrays

    def run():
        m = np.zeros(2 * inst.m)
        mod.bp_run(a.indptr, a.nbr, a.wt, a.arc_in, a.arc_out, m, np.empty_like(m), steps, -1.0)

    return _best_of(run)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=400, help="ring size for the rebalancing benchmark")
    ap.add_argument("--side", type=int, default=40, help="side of the bipartite BP benchmark")
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()

    mods = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels is not None else [])
    ring = generate_ring(max(1, args.nodes // 8), 1 / 3)
    bip = generate_random_bipartite(args.side, args.side, 0.2, seed=0)
    print(f"rebalance: ring n={ring.instance.n}, {args.steps} steps")
    print(f"bp:        bipartite n={bip.n} m={bip.m}, {args.steps} steps")
    rows = {}
    for name, mod in mods:
        rows[name] = (
            bench_rebalance(mod, ring.instance, ring.outcome.matching, ring.outcome.gamma, args.steps),
            bench_bp(mod, bip, args.steps),
        )
    print(f"{'backend':8s} {'rebalance s':>12s} {'bp s':>10s}")
    for name, (r, b) in rows.items():
        print(f"{name:8s} {r:12.4f} {b:10.4f}")
    if "cython" in rows:
        r_py, b_py = rows["python"]
        r_cy, b_cy = rows["cython"]
        print(f"speedup  {r_py / r_cy:11.1f}x {b_py / b_cy:9.1f}x")

    small = generate_random_bipartite(8, 8, 0.3, seed=1)
    t0 = time.perf_counter()
    solve(small, SolveConfig(epsilon=1e-6, step1_backend="bp"))
    print(f"end-to-end solve (n=16, eps=1e-6, default backend): {time.perf_counter() - t0:.4f} s")


if __name__ == "__main__":
    main()
