"""Timing comparison of the numba kernels against the pure-numpy fallback.

Both kernel modules are imported directly, so what SHIFTLOGNMF_BACKEND says
does not matter here. Each of the four hot kernels runs on identical inputs
derived from one simulated count matrix; the solvers get a fresh copy of the
factor block per repetition, since they update it in place.

    python3 benchmarks/bench_backends.py --n 1000 --m 800 --k 8 --reps 5
"""

import argparse
import math
import time

import numpy as np

from shiftlognmf import make_quad, simulate
from shiftlognmf import _kernels_numpy

try:
    from shiftlognmf import _kernels_numba
except ImportError:
    _kernels_numba = None


def median_time(run, reps):
    ts = []
    for _ in range(reps):
        t0 = time.perf_counter()
        run()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def build_cases(args):
    Y, L_true, F_true = simulate(args.n, args.m, args.k, args.c, args.sparsity,
                                 seed=args.seed)
    rng = np.random.default_rng(args.seed + 1)
    L = rng.uniform(0.1, 1.0, size=(args.n, args.k))
    F = rng.uniform(0.1, 1.0, size=(args.m, args.k))
    c_row = np.full(args.n, args.c)
    ones_m = np.ones(args.m)
    quad = make_quad("approx-chebyshev", args.c)
    a_row = np.maximum(1.0, c_row)
    w1 = c_row / a_row
    w2 = c_row / (a_row * a_row)
    S = F.sum(axis=0)
    G = F.T @ F

    def case(kmod):
        return {
            "exact_loglik_rows": lambda: kmod.exact_loglik_rows(
                L, F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row),
            "approx_nz_rows": lambda: kmod.approx_nz_rows(
                L, F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row,
                quad.eta1, quad.eta2),
            "solve_block_exact": lambda: kmod.solve_block_exact(
                L.copy(), F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row, ones_m,
                args.cycles, 30),
            "solve_block_approx": lambda: kmod.solve_block_approx(
                L.copy(), F, Y.row_ptr, Y.row_idx, Y.row_val_f, c_row, ones_m,
                S, G, w1, w2, quad.eta1, quad.eta2, args.cycles, 30),
        }

    return Y, case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--m", type=int, default=800)
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--sparsity", type=float, default=0.95)
    ap.add_argument("--cycles", type=int, default=2)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    Y, case = build_cases(args)
    print("data: %dx%d, %d stored entries (%.1f%% zeros), K=%d, c=%g"
          % (args.n, args.m, Y.nnz, 100.0 * (1 - Y.nnz / (args.n * args.m)),
             args.k, args.c))

    backends = [("numpy", _kernels_numpy)]
    if _kernels_numba is not None:
        backends.append(("numba", _kernels_numba))
    else:
        print("numba not importable; timing the numpy fallback only")

    results = {}
    for name, kmod in backends:
        for kernel, run in case(kmod).items():
            run()  # warm jit caches before timing
            results[(name, kernel)] = median_time(run, args.reps)

    kernels = ["exact_loglik_rows", "approx_nz_rows",
               "solve_block_exact", "solve_block_approx"]
    header = "%-20s %10s" % ("kernel", "numpy")
    if _kernels_numba is not None:
        header += " %10s %9s" % ("numba", "speedup")
    print(header)
    for kernel in kernels:
        tn = results[("numpy", kernel)]
        line = "%-20s %8.2fms" % (kernel, 1e3 * tn)
        if _kernels_numba is not None:
            tb = results[("numba", kernel)]
            line += " %8.2fms %8.2fx" % (1e3 * tb, tn / tb)
        print(line)


if __name__ == "__main__":
    main()
