"""Timing comparison of the compiled and pure-Python descent kernels.

Runs a fixed set of path-fitting workloads under the active kernel and
prints per-workload wall times.  With --compare, re-invokes itself twice
(once per kernel, selected via TWOSTEP_PURE_PYTHON) and prints the
speedup, so the two kernels never share a process.

Usage:
    python3 benchmarks/bench_descent.py --compare
    python3 benchmarks/bench_descent.py            # active kernel only
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _workloads():
    rng = np.random.default_rng(42)
    out = []
    for name, n, p, rho in (
        ("tall n=200 p=50", 200, 50, 0.5),
        ("square n=100 p=100", 100, 100, 0.7),
        ("wide n=50 p=400", 50, 400, 0.5),
    ):
        idx = np.arange(p)
        chol = np.linalg.cholesky(
            rho ** np.abs(idx[:, None] - idx[None, :]) + 1e-12 * np.eye(p)
        )
        x = rng.standard_normal((n, p)) @ chol.T
        beta = np.zeros(p)
        beta[: p // 10] = rng.uniform(1.0, 3.0, p // 10)
        y = x @ beta + 0.5 * rng.standard_normal(n)
        out.append((name, x, y))
    return out


def run_suite(repeats: int) -> dict:
    from twostep.data import make_dataset, standardize
    from twostep.descent import HAVE_COMPILED
    from twostep.initial import lasso_path
    from twostep.selectors import alasso_path, fit_initial, garrote_path

    results = {"kernel": "compiled" if HAVE_COMPILED else "pure-python", "times": {}}
    for name, x, y in _workloads():
        ds = standardize(make_dataset(x, y))
        init = fit_initial(ds, "ridge")
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            lasso_path(ds)
            garrote_path(ds, init)
            alasso_path(ds, init)
            best = min(best, time.perf_counter() - t0)
        results["times"][name] = best
    return results


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--compare", action="store_true",
                    help="run both kernels in subprocesses and report speedups")
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repetitions per workload (best is kept)")
    ap.add_argument("--json", action="store_true",
                    help="emit machine-readable results")
    args = ap.parse_args(argv)

    if not args.compare:
        res = run_suite(args.repeats)
        if args.json:
            print(json.dumps(res))
        else:
            print(f"kernel: {res['kernel']}")
            for name, t in res["times"].items():
                print(f"  {name:22s} {t * 1e3:9.1f} ms")
        return 0

    runs = {}
    for label, pure in (("compiled", "0"), ("pure-python", "1")):
        env = dict(os.environ, TWOSTEP_PURE_PYTHON=pure)
        cmd = [sys.executable, __file__, "--json", "--repeats", str(args.repeats)]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            return 1
        runs[label] = json.loads(proc.stdout)
        if runs[label]["kernel"] != label:
            sys.stderr.write(f"expected the {label} kernel to load; got "
                             f"{runs[label]['kernel']} (is the extension built?)\n")
            return 1

    print(f"{'workload':22s} {'compiled':>12s} {'pure-python':>12s} {'speedup':>9s}")
    for name in runs["compiled"]["times"]:
        tc = runs["compiled"]["times"][name]
        tp = runs["pure-python"]["times"][name]
        print(f"{name:22s} {tc * 1e3:10.1f} ms {tp * 1e3:10.1f} ms {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
