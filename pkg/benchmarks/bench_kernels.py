#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py            # table
    python benchmarks/bench_kernels.py --json     # machine-readable
    python benchmarks/bench_kernels.py --size 2500 --runs 7

Each kernel is run on identical inputs through both implementations, checked
for agreement, and timed (best of ``--runs`` after one warm-up call, so numba
compilation is excluded). ``--end-to-end`` additionally times full solves in
subprocesses with ``GRIDFLOW_DISABLE_NUMBA`` unset and set.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from gridflow import Branch, Bus, BusType, Case, Generator, build_system_matrices
from gridflow import _kernels as K


def grid_case(n_side: int, seed: int = 7) -> Case:
    """Meshed ``n_side x n_side`` lattice with loads, a few PV units and one slack."""
    rng = np.random.default_rng(seed)
    n = n_side * n_side
    buses, gens, branches = [], [], []
    for k in range(n):
        kind = BusType.SLACK if k == 0 else (BusType.PV if k % 17 == 0 else BusType.PQ)
        buses.append(Bus(k + 1, kind, pd=0.02 * rng.random(), qd=0.005 * rng.random()))
        if kind is not BusType.PQ:
            gens.append(Generator(k + 1, pg=0.1, vg=1.0, pmax=10.0))
    for r in range(n_side):
        for c in range(n_side):
            k = r * n_side + c
            for nb in ((k + 1) if c + 1 < n_side else None, (k + n_side) if r + 1 < n_side else None):
                if nb is not None:
                    branches.append(Branch(k + 1, nb + 1, r=0.002 + 0.002 * rng.random(),
                                           x=0.02 + 0.02 * rng.random(), b=0.01))
    return Case(100.0, tuple(buses), tuple(branches), tuple(gens), name=f"grid{n}")


def best_of(fn, runs):
    fn()  # warm-up / compile
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_partials(case, runs):
    ybus = build_system_matrices(case).ybus
    rng = np.random.default_rng(1)
    vm = 1 + 0.05 * rng.standard_normal(case.n_bus)
    va = 0.1 * rng.standard_normal(case.n_bus)
    a = K.polar_partials_numba(ybus, vm, va)
    b = K.polar_partials_numpy(ybus, vm, va)
    err = max(np.abs(a[0] - b[0]).max(), np.abs(a[1] - b[1]).max(),
              *(abs(x - y).max() for x, y in zip(a[2:], b[2:])))
    return ("polar_partials", best_of(lambda: K.polar_partials_numba(ybus, vm, va), runs),
            best_of(lambda: K.polar_partials_numpy(ybus, vm, va), runs), err)


def bench_gs(case, runs):
    ybus = build_system_matrices(case).ybus.tocsr()
    n = case.n_bus
    kind = np.where(case.bus_types == BusType.SLACK, K.SLACK,
                    np.where(case.bus_types == BusType.PV, K.PV, K.PQ)).astype(np.int64)
    sspec = -(case.pd + 1j * case.qd)
    vset = np.ones(n)
    v0 = np.ones(n, dtype=complex)
    va, vb = v0.copy(), v0.copy()
    K.gs_sweep_numba(ybus, va, sspec, kind, vset)
    K.gs_sweep_numpy(ybus, vb, sspec, kind, vset)
    err = float(np.abs(va - vb).max())
    return ("gs_sweep", best_of(lambda: K.gs_sweep_numba(ybus, v0.copy(), sspec, kind, vset), runs),
            best_of(lambda: K.gs_sweep_numpy(ybus, v0.copy(), sspec, kind, vset), runs), err)


def bench_eta(m, runs, k=64):
    rng = np.random.default_rng(2)
    rows = rng.integers(0, m, size=k).astype(np.int64)
    etas = rng.standard_normal((k, m)) * 0.1
    etas[np.arange(k), rows] = 1.0 + rng.random(k)
    w = rng.standard_normal(m)
    wa, wb = w.copy(), w.copy()
    K.eta_ftran_numba(wa, rows, etas, k)
    K.eta_ftran_numpy(wb, rows, etas, k)
    ua, ub = w.copy(), w.copy()
    K.eta_btran_numba(ua, rows, etas, k)
    K.eta_btran_numpy(ub, rows, etas, k)
    err = max(np.abs(wa - wb).max(), np.abs(ua - ub).max())

    def both(f, g):
        def run():
            f(w.copy(), rows, etas, k)
            g(w.copy(), rows, etas, k)
        return run

    return (f"eta_ftran+btran (m={m}, k={k})",
            best_of(both(K.eta_ftran_numba, K.eta_btran_numba), runs),
            best_of(both(K.eta_ftran_numpy, K.eta_btran_numpy), runs), err)


def bench_markov(count, horizon, runs):
    rng = np.random.default_rng(3)
    p = rng.random((horizon - 1, 3, 3))
    p /= p.sum(axis=2, keepdims=True)
    step_cdf = np.cumsum(p, axis=2)
    init_cdf = np.cumsum(np.full(3, 1 / 3))
    u = rng.random((count, horizon))
    a = K.markov_paths_numba(init_cdf, step_cdf, u)
    b = K.markov_paths_numpy(init_cdf, step_cdf, u)
    err = float(np.abs(a - b).max())
    return (f"markov_paths ({count}x{horizon})",
            best_of(lambda: K.markov_paths_numba(init_cdf, step_cdf, u), runs),
            best_of(lambda: K.markov_paths_numpy(init_cdf, step_cdf, u), runs), err)


_E2E = """
import time
from gridflow.powerflow import solve
from benchmarks.bench_kernels import grid_case
case = grid_case({side})
solve(case, method="{method}")  # compile / warm caches
t0 = time.perf_counter()
sol = solve(case, method="{method}")
print(time.perf_counter() - t0, sol.iterations, sol.converged)
"""


def end_to_end(side, method):
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, GRIDFLOW_DISABLE_NUMBA=flag, PYTHONPATH=root)
        res = subprocess.run([sys.executable, "-c", _E2E.format(side=side, method=method)],
                             capture_output=True, text=True, env=env, cwd=root, check=True)
        out[label] = float(res.stdout.split()[0])
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=40, help="lattice side (buses = size**2)")
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--json", action="store_true")
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)

    case = grid_case(args.size)
    results = [
        bench_partials(case, args.runs),
        bench_gs(case, args.runs),
        bench_eta(2000, args.runs),
        bench_markov(20000, 24, args.runs),
    ]
    rows = [{"kernel": name, "numba_s": tn, "numpy_s": tp, "speedup": tp / tn if tn > 0 else float("inf"),
             "max_abs_diff": float(err)} for name, tn, tp, err in results]
    e2e = {}
    if args.end_to_end:
        for method in ("newton", "gs"):
            e2e[method] = end_to_end(min(args.size, 20) if method == "gs" else args.size, method)

    if args.json:
        print(json.dumps({"buses": case.n_bus, "kernels": rows, "end_to_end": e2e}, indent=2))
        return
    print(f"{case.n_bus}-bus lattice, best of {args.runs}\n")
    print(f"{'kernel':36s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for r in rows:
        print(f"{r['kernel']:36s} {r['numba_s'] * 1e3:11.3f} {r['numpy_s'] * 1e3:11.3f} "
              f"{r['speedup']:8.1f} {r['max_abs_diff']:10.2e}")
    for method, t in e2e.items():
        print(f"\nsolve({method}): numba {t['numba'] * 1e3:.1f} ms, numpy {t['numpy'] * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
