"""Gram-matrix timing: compiled backend vs pure numpy.

The backend is fixed at import time by POSEGP_BACKEND, so the script
re-executes itself once per backend in a subprocess and prints one
combined table.  Usage: python benchmarks/bench_backends.py
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def _build_inputs(n):
    from posegp import Pose, random_rotation

    rng = np.random.default_rng(7)
    return [Pose(rng.standard_normal(3), random_rotation(k)) for k in range(n)]


def _time_once(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_worker(sizes, families):
    import posegp
    from posegp import default_spec, gram_matrix

    rows = []
    for n in sizes:
        inputs = _build_inputs(n)
        for family in families:
            spec = default_spec(family)
            gram_matrix(spec, inputs, 0.0)  # warm-up / JIT
            dt = _time_once(lambda: gram_matrix(spec, inputs, 0.0))
            rows.append((posegp.active_backend, family, n, dt))
    for backend, family, n, dt in rows:
        print(f"{backend},{family},{n},{dt:.6f}")


def run_driver(sizes, families):
    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, POSEGP_BACKEND=backend)
        argv = [
            sys.executable,
            os.path.abspath(__file__),
            "--worker",
            "--sizes", ",".join(str(n) for n in sizes),
            "--families", ",".join(families),
        ]
        proc = subprocess.run(argv, capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(f"{backend}: worker failed\n{proc.stderr}", file=sys.stderr)
            continue
        for line in proc.stdout.splitlines():
            b, family, n, dt = line.split(",")
            results[(family, int(n), b)] = float(dt)

    print(f"{'family':<18} {'n':>5} {'numba (s)':>12} {'numpy (s)':>12} {'speedup':>8}")
    for family in families:
        for n in sizes:
            t_nb = results.get((family, n, "numba"))
            t_np = results.get((family, n, "numpy"))
            if t_nb is None or t_np is None:
                continue
            print(
                f"{family:<18} {n:>5} {t_nb:>12.6f} {t_np:>12.6f} {t_np / t_nb:>8.2f}"
            )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("--sizes", default="100,300,600")
    parser.add_argument("--families", default="view_iso,view_aniso,pose_product")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    families = args.families.split(",")
    if args.worker:
        run_worker(sizes, families)
    else:
        run_driver(sizes, families)


if __name__ == "__main__":
    main()
