"""Time the numba kernels against the pure-Python fallback.

Each path runs in its own interpreter because the backend is chosen at import
time from ``WARPEIG_DISABLE_NUMBA``. The compiled path is warmed up before
timing, so compilation cost is reported separately.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, math, sys, time
import warpeig
from warpeig.geometry import capacity_integral, exit_ratio
from warpeig.spectral import first_eigenvalue, first_eigenvalue_picard
from warpeig.stochastic import classify_completeness
from warpeig.warping import make_manifold

repeat = int(sys.argv[1])
sphere = make_manifold("sphere", 3)
hyper = make_manifold("hyperbolic", 2)
custom = make_manifold("expr:sinh(t)*exp(t^3)", 2)

workloads = {
    "exit_ratio x200": lambda: [exit_ratio(custom, 0.01 + 0.02 * k) for k in range(200)],
    "capacity_integral": lambda: capacity_integral(hyper, 6.0),
    "first_eigenvalue (shooting)": lambda: first_eigenvalue(sphere, 1.0, tol=1e-8),
    "first_eigenvalue_picard": lambda: first_eigenvalue_picard(hyper, 2.0, tol=1e-6),
    "classify_completeness": lambda: classify_completeness(custom),
}
warm = time.perf_counter()
for fn in workloads.values():
    fn()
warm = time.perf_counter() - warm
result = {"numba": warpeig.USE_NUMBA, "warmup_s": warm, "timings": {}}
for name, fn in workloads.items():
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    result["timings"][name] = best
print(json.dumps(result))
"""


def run_backend(disable_numba, repeat):
    env = dict(os.environ)
    if disable_numba:
        env["WARPEIG_DISABLE_NUMBA"] = "1"
    else:
        env.pop("WARPEIG_DISABLE_NUMBA", None)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="timed repetitions per workload (best is kept)")
    parser.add_argument("--json", action="store_true", help="print raw results as JSON")
    args = parser.parse_args(argv)

    compiled = run_backend(False, args.repeat)
    fallback = run_backend(True, args.repeat)
    if args.json:
        print(json.dumps({"numba": compiled, "python": fallback}, indent=2))
        return 0
    width = max(len(name) for name in compiled["timings"])
    print(f"{'workload'.ljust(width)}  {'numba [s]':>10}  {'python [s]':>10}  {'speedup':>8}")
    for name, fast in compiled["timings"].items():
        slow = fallback["timings"][name]
        print(f"{name.ljust(width)}  {fast:10.4f}  {slow:10.4f}  {slow / fast:8.1f}x")
    print(f"\nwarm-up incl. JIT compilation: numba {compiled['warmup_s']:.2f}s, python {fallback['warmup_s']:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
