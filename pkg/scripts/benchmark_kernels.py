#!/usr/bin/env python3
"""Time the compiled kernels against the pure-numpy fallback.

Swaps the backend at runtime (every call site goes through the
cvxadp.kernels module attributes) and drives the public entry points each
kernel sits under: solve_lp for the simplex pivot loop, MaxAffineModel
evaluation for the argmax kernel, and hit_and_run for the chord walk.

    python3 scripts/benchmark_kernels.py [--repeat 5] [--seed 0]
"""

import argparse
import sys
from time import perf_counter

import numpy as np

import cvxadp.kernels as kernels
from cvxadp import (HitAndRunConfig, MaxAffineModel, Polytope, hit_and_run,
                    solve_lp)
from cvxadp.kernels import _pure

try:
    from cvxadp.kernels import _speedups
except ImportError:
    _speedups = None

KERNEL_NAMES = ("simplex_chunk", "max_affine_argmax", "hit_and_run_walk")


def use_backend(impl):
    for name in KERNEL_NAMES:
        setattr(kernels, name, getattr(impl, name))


def bench(fn, repeat):
    best = np.inf
    value = None
    for _ in range(repeat):
        t0 = perf_counter()
        value = fn()
        best = min(best, perf_counter() - t0)
    return best, value


def lp_workload(rng):
    # a batch of bounded random LPs: box +- spread plus a few extra cuts
    problems = []
    for _ in range(60):
        d = int(rng.integers(4, 9))
        center = rng.uniform(-1.0, 1.0, d)
        A = [np.eye(d), -np.eye(d)]
        b = [center + rng.uniform(0.5, 3.0, d),
             -(center - rng.uniform(0.5, 3.0, d))]
        for _ in range(6):
            a = rng.normal(size=d)
            a /= np.linalg.norm(a)
            A.append(a[None, :])
            b.append(np.array([a @ center + rng.uniform(0.1, 1.0)]))
        problems.append((rng.normal(size=d), np.vstack(A), np.concatenate(b)))

    def run():
        return sum(solve_lp(p).value for p in problems)

    return run


def argmax_workload(rng):
    model = MaxAffineModel(rng.normal(size=(30, 10)), rng.normal(size=30))
    X = rng.normal(size=(200000, 10))

    def run():
        return float(model.evaluate(X).sum())

    return run


def walk_workload(rng):
    d = 7
    box = Polytope(np.vstack([np.eye(d), -np.eye(d)]),
                   np.concatenate([np.ones(d), np.zeros(d)]))

    def run():
        pts = hit_and_run(box, 20000, HitAndRunConfig(seed=42))
        return float(pts.sum())

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repetitions; the best run counts")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    workloads = [
        ("simplex_chunk / solve_lp x60", lp_workload(rng)),
        ("max_affine_argmax / evaluate 200k x 30 planes", argmax_workload(rng)),
        ("hit_and_run_walk / 20k samples in 7-D box", walk_workload(rng)),
    ]

    if _speedups is None:
        print("compiled backend unavailable; timing the pure backend only")
    print("%-48s %10s %10s %8s" % ("workload", "pure", "compiled", "speedup"))
    for label, fn in workloads:
        use_backend(_pure)
        t_pure, v_pure = bench(fn, args.repeat)
        if _speedups is None:
            print("%-48s %9.1fms %10s %8s" % (label, 1e3 * t_pure, "-", "-"))
            continue
        use_backend(_speedups)
        t_fast, v_fast = bench(fn, args.repeat)
        drift = abs(v_fast - v_pure) / max(1.0, abs(v_pure))
        if drift > 1e-9:
            print("warning: backends disagree on %s (rel drift %.2e)"
                  % (label, drift), file=sys.stderr)
        print("%-48s %9.1fms %9.1fms %7.2fx"
              % (label, 1e3 * t_pure, 1e3 * t_fast, t_pure / t_fast))
    use_backend(_speedups if _speedups is not None else _pure)
    return 0


if __name__ == "__main__":
    sys.exit(main())
