"""Benchmark the compiled alternating-minimization kernel against the
pure-numpy fallback on representative set-channel problems.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from coopcomp import kernels
from coopcomp.gentropy import SolverConfig, minimize_set_information
from coopcomp.graphs import CharGraph, enumerate_maximal_independent_sets


def random_instance(rng, n_l, n_k, edge_p):
    adj = np.zeros((n_l, n_l), dtype=bool)
    for i in range(n_l):
        for j in range(i + 1, n_l):
            if rng.random() < edge_p:
                adj[i, j] = adj[j, i] = True
    graph = CharGraph(
        tuple((i,) for i in range(n_l)), adj, ("l",), ("k",), ("l", "k")
    )
    family = enumerate_maximal_independent_sets(graph)
    p_lk = rng.gamma(1.0, 1.0, size=(n_l, n_k))
    p_lk /= p_lk.sum()
    return graph, family, p_lk


def run(backend_fn, mask, p_lk, q0, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        value, _q, iters = backend_fn(mask, [p_lk], [1.0], q0, 1e-10, 20_000)
    return time.perf_counter() - t0, value, iters


def main():
    rng = np.random.default_rng(42)
    cases = [
        ("small 5x4", 5, 4, 0.5, 400),
        ("medium 9x6", 9, 6, 0.4, 150),
        ("large 14x8", 14, 8, 0.35, 40),
    ]
    print(f"compiled backend available: {kernels.compiled_available()}")
    print(f"{'case':<14} {'sets':>5} {'iters':>6} {'pure (s)':>9} {'cython (s)':>10} {'speedup':>8}")
    for name, n_l, n_k, edge_p, reps in cases:
        graph, family, p_lk = random_instance(rng, n_l, n_k, edge_p)
        mask = np.zeros((len(family), n_l), dtype=bool)
        for si, s in enumerate(family.sets):
            for v in s:
                mask[si, graph.index(v)] = True
        q0 = mask.astype(float) / mask.sum(axis=0)
        t_pure, v_pure, iters = run(kernels.solve_masked_mi_pure, mask, p_lk, q0, reps)
        if kernels.compiled_available():
            from coopcomp import _ba_core

            t_cy, v_cy, _ = run(_ba_core.solve_masked_mi, mask, p_lk, q0, reps)
            assert abs(v_pure - v_cy) < 1e-9, (v_pure, v_cy)
            print(
                f"{name:<14} {len(family):>5} {iters:>6} {t_pure:>9.3f} {t_cy:>10.3f} "
                f"{t_pure / t_cy:>7.1f}x"
            )
        else:
            print(f"{name:<14} {len(family):>5} {iters:>6} {t_pure:>9.3f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
