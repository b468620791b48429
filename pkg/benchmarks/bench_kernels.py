#!/usr/bin/env python3
"""Benchmark the edge-kernel backends against each other.

Times every kernel routine on synthetic problems of growing edge count,
for each importable backend, and prints a table of per-call times with
the compiled/numpy speedup.  Also times one full solve per backend on a
planted problem.  Run from a source checkout or an installed package:

    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000]
                                        [--classes 4] [--repeats 7]
"""

import argparse
import time

import numpy as np

from covclust import SolverConfig, solve
from covclust.data import SimilarityGraph
from covclust.kernels import available_backends
from covclust.synth import make_ground_truth, make_similarity, sample


def edge_problem(rng, l, c):
    """Random directed-edge arrays shaped like one solver iteration."""
    d = max(2, l // 4)
    bt = rng.normal(size=(d, c))
    z = rng.normal(size=(2 * l, c))
    u = rng.normal(scale=0.3, size=(2 * l, c))
    ei = rng.integers(0, d - 1, size=l).astype(np.int64)
    ej = (ei + 1 + rng.integers(0, d - 1 - ei)).astype(np.int64)
    tails = np.concatenate([ei, ej])
    w = rng.uniform(0.2, 2.0, size=l)
    return d, bt, z, u, ei, ej, tails, w


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(sizes, c, repeats, seed):
    backends = available_backends()
    names = sorted(backends)
    print(f"backends: {', '.join(names)}   (classes c={c}, "
          f"best of {repeats})")
    header = f"{'kernel':<18} {'edges':>8} " + "".join(
        f"{n:>12} " for n in names)
    if len(names) == 2:
        header += f"{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for l in sizes:
        rng = np.random.default_rng(seed)
        d, bt, z, u, ei, ej, tails, w = edge_problem(rng, l, c)
        z_out = np.empty_like(z)
        theta = np.empty(l)
        z_new = z + 0.01 * u
        calls = {
            "aux_update": lambda b: b.aux_update(bt, u, ei, ej, w, 1.2, 1.0,
                                                 z_out, theta),
            "dual_update": lambda b: b.dual_update(u.copy(), z, bt, tails),
            "edge_aggregates": lambda b: b.edge_aggregates(z, u, tails, d),
            "primal_residual": lambda b: b.primal_residual_sq(z, bt, tails),
            "diff_sq": lambda b: b.diff_sq(z_new, z),
            "fused_mask": lambda b: b.fused_mask(z),
        }
        for kernel, call in calls.items():
            times = {n: best_of(repeats, call, backends[n]) for n in names}
            row = f"{kernel:<18} {l:>8} " + "".join(
                f"{times[n] * 1e6:>10.1f}us " for n in names)
            if len(names) == 2:
                row += f"{times['numpy'] / times['compiled']:>8.1f}x"
            print(row)
        print()


def bench_solve(c, repeats, seed):
    d, K, n = 60, 6, 600
    truth = make_ground_truth(d, c=c, K=K)
    S = make_similarity(truth, "agree")
    data = sample(truth.with_similarity(S), n, seed=seed)
    graph = SimilarityGraph.from_dense(S * (1.0 - np.eye(d)))
    print(f"full solve (d={d}, n={n}, c={c}, {graph.edges.shape[0]} edges, "
          f"nu={float(n) / 8:g}):")
    results = {}
    for name in sorted(available_backends()):
        cfg = SolverConfig(nu=n / 8, kernels=name)
        seconds = best_of(repeats, solve, data, graph, cfg)
        state, _ = solve(data, graph, cfg)
        results[name] = (seconds, state)
        print(f"  {name:>8}: {seconds:.3f}s  ({state.k} iterations, "
              f"converged={state.converged})")
    if len(results) == 2:
        (sn, a), (sc, b) = results["numpy"], results["compiled"]
        same = np.array_equal(a.params.B, b.params.B) and \
            np.array_equal(a.z, b.z)
        print(f"  speedup {sn / sc:.2f}x; trajectories bit-identical: "
              f"{same}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,10000,100000",
                        help="comma-separated undirected edge counts")
    parser.add_argument("--classes", type=int, default=4)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    bench_kernels(sizes, args.classes, args.repeats, args.seed)
    bench_solve(args.classes, max(2, args.repeats // 2), args.seed)


if __name__ == "__main__":
    main()
