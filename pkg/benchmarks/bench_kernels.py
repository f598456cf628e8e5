#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Times the two hot kernels on synthetic workloads of increasing size, plus
one end-to-end order-8 linearization of the shipped reference instance per
backend.  Run from the repository root:

    python benchmarks/bench_kernels.py

The backend used by the end-to-end row is selected with TORUSLIN_KERNELS,
so that section re-executes this script in subprocesses.
"""

import os
import subprocess
import sys
import time

import numpy as np


def random_table(rng, nterms, n, d, hband, vmax):
    exps = np.column_stack([
        rng.integers(-hband, hband + 1, size=(nterms, n)),
        rng.integers(0, vmax + 1, size=(nterms, d)),
    ]).astype(np.int64)
    exps = np.unique(exps, axis=0)
    vals = rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))
    return exps, vals


def time_call(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels():
    from toruslin._kernels import get_backend

    backends = {}
    for name in ("py", "c"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print("backend %r unavailable, skipping" % name)
    rng = np.random.default_rng(1)

    print("\ncauchy_product  (terms x terms -> best of 5, seconds)")
    print("%-18s %12s %12s %8s" % ("size", "py", "c", "speedup"))
    for nterms in (50, 200, 800):
        ea, va = random_table(rng, nterms, 1, 1, 40, 8)
        eb, vb = random_table(rng, nterms, 1, 1, 40, 8)
        row = {}
        for name, mod in backends.items():
            row[name] = time_call(mod.cauchy_product, ea, va, eb, vb,
                                  1, 1, 8, 80, 1e-300)
        speedup = row["py"] / row["c"] if {"py", "c"} <= set(row) else 0.0
        print("%-18s %12.6f %12.6f %7.1fx"
              % ("%dx%d" % (len(va), len(vb)),
                 row.get("py", float("nan")), row.get("c", float("nan")),
                 speedup))

    print("\nevaluate  (terms @ points -> best of 5, seconds)")
    print("%-18s %12s %12s %8s" % ("size", "py", "c", "speedup"))
    for nterms, npts in ((100, 1000), (200, 10000)):
        exps, vals = random_table(rng, nterms, 1, 1, 8, 8)
        logh = rng.uniform(-0.2, 0.2, (npts, 1)) \
            + 1j * rng.uniform(0, 6.28, (npts, 1))
        v = 0.4 * np.exp(1j * rng.uniform(0, 6.28, (npts, 1)))
        row = {}
        for name, mod in backends.items():
            row[name] = time_call(mod.evaluate, exps, vals, logh, v, repeat=3)
        speedup = row["py"] / row["c"] if {"py", "c"} <= set(row) else 0.0
        print("%-18s %12.6f %12.6f %7.1fx"
              % ("%d@%d" % (len(vals), npts),
                 row.get("py", float("nan")), row.get("c", float("nan")),
                 speedup))


def bench_end_to_end():
    print("\nend-to-end: linearize order 8 on the reference instance")
    print("%-10s %12s" % ("backend", "seconds"))
    code = (
        "import time, toruslin\n"
        "from toruslin.problem import parse_problem\n"
        "from toruslin.linearize import build_family, linearize\n"
        "p = parse_problem(toruslin.reference_problem_path())\n"
        "fam = build_family(p.lattice, p.data, p.pert_records,\n"
        "                   p.run['vmax'], p.run['hband'],\n"
        "                   eps0=p.run['epsilon'], r0=p.run['radius'])\n"
        "t0 = time.perf_counter()\n"
        "linearize(fam, p.run['order'], p.run['epsilon'], p.run['radius'],\n"
        "          pmax=p.run['pmax'], qmax=p.run['qmax'])\n"
        "print('%.3f' % (time.perf_counter() - t0))\n"
    )
    for name in ("py", "c"):
        env = dict(os.environ, TORUSLIN_KERNELS=name)
        try:
            out = subprocess.run([sys.executable, "-c", code], env=env,
                                 capture_output=True, text=True, check=True)
            print("%-10s %12s" % (name, out.stdout.strip()))
        except subprocess.CalledProcessError as exc:
            print("%-10s failed: %s" % (name, exc.stderr.strip()[-200:]))


if __name__ == "__main__":
    bench_kernels()
    bench_end_to_end()
