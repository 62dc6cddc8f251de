#!/usr/bin/env python3
"""Compare the compiled simulation kernel against the pure-Python one.

Runs matched workloads on every available backend, checks that the
metrics agree exactly (they consume identical random draws), and prints
wall times with the resulting speedup.

Usage: python benchmarks/bench_backends.py [--users N] [--frames T] [--reps R]
"""

import argparse

from aoii_sched.bench import benchmark_backends, format_benchmark
from aoii_sched.policies import PolicyKind


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--users", type=int, default=24)
    parser.add_argument("--frames", type=int, default=50_000)
    parser.add_argument("--reps", type=int, default=4)
    parser.add_argument("--seed", type=int, default=20250)
    args = parser.parse_args()

    results = benchmark_backends(
        n_users=args.users, frames=args.frames, replications=args.reps,
        seed=args.seed,
        policies=(PolicyKind.ROUND_ROBIN, PolicyKind.GREEDY_AOII,
                  PolicyKind.WHITTLE_AOII, PolicyKind.WHITTLE_AOI))
    print(format_benchmark(results))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
