"""Timing comparison of the simulation kernels.

Runs the same workload on every available backend and reports wall
time, throughput and the speedup of the compiled kernel.  Since both
kernels consume the same pre-drawn uniforms, their metrics must agree
exactly; the benchmark asserts that as a sanity check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from ._backend import available_backends
from .policies import PolicyKind
from .scenarios import ramp
from .model import UserParams, validate_all
from .simulate import SimConfig, run


@dataclass(frozen=True)
class BenchResult:
    backend: str
    policy: str
    seconds: float
    user_frames_per_s: float
    avg_aoii: float


def _workload(n_users: int, frames: int, replications: int, seed: int,
              policy: PolicyKind, backend: str) -> BenchResult:
    users = validate_all(UserParams(n_states=2, p_remain=float(r),
                                    p_success=float(s))
                         for r, s in zip(ramp(0.05, 0.95, n_users),
                                         ramp(0.95, 0.05, n_users)))
    cfg = SimConfig(users=users, m=max(1, n_users // 8), frames=frames,
                    replications=replications, seed=seed, policy=policy,
                    backend=backend)
    start = time.perf_counter()
    report = run(cfg)
    elapsed = time.perf_counter() - start
    total = n_users * frames * replications
    return BenchResult(backend=backend, policy=policy.value, seconds=elapsed,
                       user_frames_per_s=total / elapsed, avg_aoii=report.avg_aoii)


def benchmark_backends(n_users: int = 16, frames: int = 20_000,
                       replications: int = 4, seed: int = 20250,
                       policies: tuple[PolicyKind, ...] = (
                           PolicyKind.GREEDY_AOII, PolicyKind.WHITTLE_AOII)
                       ) -> list[BenchResult]:
    results = []
    for policy in policies:
        per_policy = [_workload(n_users, frames, replications, seed, policy, b)
                      for b in available_backends()]
        metrics = {r.avg_aoii for r in per_policy}
        if len(metrics) != 1:
            raise AssertionError(f"backends disagree on {policy.value}: {metrics}")
        results.extend(per_policy)
    return results


def format_benchmark(results: list[BenchResult]) -> str:
    lines = [f"{'policy':<10} {'backend':<8} {'seconds':>9} {'user-frames/s':>15}"]
    for r in results:
        lines.append(f"{r.policy:<10} {r.backend:<8} {r.seconds:>9.3f} "
                     f"{r.user_frames_per_s:>15,.0f}")
    by_policy: dict[str, dict[str, float]] = {}
    for r in results:
        by_policy.setdefault(r.policy, {})[r.backend] = r.seconds
    for policy, t in by_policy.items():
        if "cython" in t and "python" in t:
            lines.append(f"{policy}: compiled kernel speedup "
                         f"{t['python'] / t['cython']:.1f}x")
    if not any("cython" == r.backend for r in results):
        lines.append("compiled kernel unavailable; showing the Python kernel only")
    return "\n".join(lines)
