"""Frame-synchronous multi-user simulation with Monte Carlo replication.

Each frame: sample query indicators, let the policy pick at most m
users, sample the selected users' channels, then move every source one
step.  Metrics accrue on the pre-transition age, so frame t contributes
the age the scheduler saw at frame t.

Randomness is pre-drawn per replication as a ``(frames, users, 3)``
block of uniforms keyed only by (seed, replication).  Policies never
consume randomness, which gives common random numbers across policy
comparisons, and both kernels read the same block, which makes backend
choice irrelevant to the trajectory.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import policies as pol
from ._backend import get_backend
from .model import UserParams, validate_all
from .policies import PolicyKind, PriorityTable

DEFAULT_CHUNK = 8192


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment: users, horizon, replication plan, policy."""

    users: tuple[UserParams, ...]
    m: int
    frames: int
    replications: int
    seed: int
    policy: PolicyKind
    greedy_query_aware: bool = False
    backend: str | None = None
    chunk_frames: int = DEFAULT_CHUNK

    def validated(self) -> "SimConfig":
        if self.frames < 1 or self.replications < 1 or self.m < 1:
            raise ValueError("frames, replications and m must all be >= 1")
        if not self.users:
            raise ValueError("at least one user is required")
        return replace(self, users=validate_all(self.users))


@dataclass(frozen=True)
class RepMetrics:
    """Per-replication outcome."""

    avg_aoii: float          # age total / (frames * users)
    avg_qaoii: float         # queried-age total / query count
    frame_sum_aoii: float    # age total / frames
    frame_sum_qaoii: float   # queried-age total / frames
    active_share: float      # transmissions / (frames * users)
    aoii_total: int
    queried_age_total: int
    query_count: int


@dataclass(frozen=True)
class SimReport:
    """Replication-averaged metrics for one (config, policy) run."""

    policy: str
    n_users: int
    m: int
    frames: int
    replications: int
    seed: int
    backend: str
    per_replication: tuple[RepMetrics, ...]
    avg_aoii: float
    std_aoii: float
    avg_qaoii: float
    std_qaoii: float
    avg_frame_sum_qaoii: float
    std_frame_sum_qaoii: float

    @property
    def avg_frame_sum_aoii(self) -> float:
        return self.avg_aoii * self.n_users

    @property
    def std_frame_sum_aoii(self) -> float:
        return self.std_aoii * self.n_users

    def metric(self, name: str) -> tuple[float, float]:
        """(mean, sample std) of a named metric over replications."""
        if name == "aoii":
            return self.avg_aoii, self.std_aoii
        if name == "qaoii":
            return self.avg_qaoii, self.std_qaoii
        if name == "aoii_sum":
            return self.avg_frame_sum_aoii, self.std_frame_sum_aoii
        if name == "qaoii_sum":
            return self.avg_frame_sum_qaoii, self.std_frame_sum_qaoii
        raise KeyError(f"unknown metric {name!r}")


@dataclass(frozen=True)
class Trace:
    """Per-frame record of a single replication (ages are pre-transition)."""

    deltas: np.ndarray      # (frames, users) int
    selected: np.ndarray    # (frames, users) bool
    delivered: np.ndarray   # (frames, users) bool
    queried: np.ndarray     # (frames, users) bool

    @property
    def frames(self) -> int:
        return self.deltas.shape[0]

    def decisions(self) -> list[tuple[int, ...]]:
        return [tuple(int(i) for i in np.flatnonzero(row)) for row in self.selected]


def _param_arrays(users: Sequence[UserParams]):
    p_stay = np.array([u.p_remain for u in users], dtype=np.float64)
    p_move = np.array([u.p_trans for u in users], dtype=np.float64)
    p_succ = np.array([u.p_success for u in users], dtype=np.float64)
    q = np.array([u.q_query for u in users], dtype=np.float64)
    return p_stay, p_move, p_succ, q


def _replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))


def _run_replication(kernel, users, m, frames, policy_code, table, thresholds,
                     rng, chunk, trace_rows=None):
    n = len(users)
    p_stay, p_move, p_succ, q = _param_arrays(users)
    delta = np.zeros(n, dtype=np.int64)
    aoi = np.ones(n, dtype=np.int64)
    accum = np.zeros(4, dtype=np.int64)
    rr_cursor = 0
    done = 0
    while done < frames:
        block = min(chunk, frames - done)
        u_block = rng.random((block, n, 3))
        rr_cursor = kernel.sim_chunk(u_block, delta, aoi, policy_code, m,
                                     p_stay, p_move, p_succ, q, table,
                                     thresholds, rr_cursor, accum, trace_rows)
        done += block
    return accum


def _metrics_from_accum(accum, frames: int, n: int) -> RepMetrics:
    aoii_total = int(accum[0])
    q_total = int(accum[1])
    q_count = int(accum[2])
    tx_count = int(accum[3])
    return RepMetrics(
        avg_aoii=aoii_total / (frames * n),
        avg_qaoii=q_total / max(1, q_count),
        frame_sum_aoii=aoii_total / frames,
        frame_sum_qaoii=q_total / frames,
        active_share=tx_count / (frames * n),
        aoii_total=aoii_total,
        queried_age_total=q_total,
        query_count=q_count,
    )


def _summarize(config: SimConfig, reps: list[RepMetrics], backend_name: str) -> SimReport:
    aoii = np.array([r.avg_aoii for r in reps])
    qaoii = np.array([r.avg_qaoii for r in reps])
    qsum = np.array([r.frame_sum_qaoii for r in reps])
    ddof = 1 if len(reps) > 1 else 0
    return SimReport(
        policy=config.policy.value,
        n_users=len(config.users),
        m=min(config.m, len(config.users)),
        frames=config.frames,
        replications=config.replications,
        seed=config.seed,
        backend=backend_name,
        per_replication=tuple(reps),
        avg_aoii=float(aoii.mean()),
        std_aoii=float(aoii.std(ddof=ddof)),
        avg_qaoii=float(qaoii.mean()),
        std_qaoii=float(qaoii.std(ddof=ddof)),
        avg_frame_sum_qaoii=float(qsum.mean()),
        std_frame_sum_qaoii=float(qsum.std(ddof=ddof)),
    )


def run(config: SimConfig) -> SimReport:
    """Simulate every replication of ``config`` and aggregate the metrics."""
    config = config.validated()
    kernel = get_backend(config.backend)
    n = len(config.users)
    if config.m > n:
        warnings.warn(f"m={config.m} exceeds the {n} users; clamping", stacklevel=2)
    m = min(config.m, n)
    code = pol.kernel_code(config.policy, config.greedy_query_aware)
    table = None
    if code in (pol.TABLE_DELTA, pol.TABLE_AOI):
        table = PriorityTable(config.policy, config.users)

    reps = []
    zero_query_reps = 0
    for rep in range(config.replications):
        rng = _replication_rng(config.seed, rep)
        accum = _run_replication(kernel, config.users, m, config.frames, code,
                                 table, None, rng, config.chunk_frames)
        metrics = _metrics_from_accum(accum, config.frames, n)
        if metrics.query_count == 0:
            zero_query_reps += 1
        reps.append(metrics)
    if zero_query_reps:
        warnings.warn(f"{zero_query_reps} replication(s) saw no query at all; "
                      "their query-sampled age is reported as 0", stacklevel=2)
    return _summarize(config, reps, kernel.NAME)


def metric_timeseries(config: SimConfig, max_frames: int = 1_000_000) -> Trace:
    """Run one replication and record every frame.

    Requires ``replications == 1`` and a horizon within ``max_frames``
    (the trace is kept in memory row by row).
    """
    config = config.validated()
    if config.replications != 1:
        raise ValueError("time series requires exactly one replication")
    if config.frames > max_frames:
        raise ValueError(f"frames={config.frames} exceeds the trace cap {max_frames}")
    kernel = get_backend(config.backend)
    n = len(config.users)
    m = min(config.m, n)
    code = pol.kernel_code(config.policy, config.greedy_query_aware)
    table = None
    if code in (pol.TABLE_DELTA, pol.TABLE_AOI):
        table = PriorityTable(config.policy, config.users)

    rows: list = []
    rng = _replication_rng(config.seed, 0)
    _run_replication(kernel, config.users, m, config.frames, code, table, None,
                     rng, config.chunk_frames, trace_rows=rows)
    deltas = np.array([r[0] for r in rows], dtype=np.int64)
    selected = np.array([r[1] for r in rows], dtype=bool)
    delivered = np.array([r[2] for r in rows], dtype=bool)
    queried = np.array([r[3] for r in rows], dtype=bool)
    return Trace(deltas=deltas, selected=selected, delivered=delivered,
                 queried=queried)


@dataclass(frozen=True)
class ThresholdSimReport:
    """Replication summary of users following fixed per-user thresholds."""

    thresholds: tuple[int, ...]
    frames: int
    replications: int
    seed: int
    backend: str
    per_replication: tuple[RepMetrics, ...]
    avg_aoii: float
    std_aoii: float
    avg_active: float
    std_active: float

    def stderr(self, name: str) -> float:
        std = self.std_aoii if name == "aoii" else self.std_active
        return std / math.sqrt(self.replications)


def run_threshold(users: Sequence[UserParams] | UserParams,
                  thresholds: Sequence[int] | int,
                  frames: int, replications: int, seed: int,
                  backend: str | None = None,
                  chunk_frames: int = DEFAULT_CHUNK) -> ThresholdSimReport:
    """Simulate users that each transmit exactly when their age reaches
    their own threshold (no shared channel constraint).

    This realizes the decoupled single-user problem the steady-state
    analytics describe, so its time averages are directly comparable to
    `analytics.threshold_stats`.
    """
    if isinstance(users, UserParams):
        users = [users]
    users = validate_all(users)
    if isinstance(thresholds, int):
        thresholds = [thresholds] * len(users)
    if len(thresholds) != len(users):
        raise ValueError("one threshold per user required")
    if any(t < 1 for t in thresholds):
        raise ValueError("thresholds must be >= 1")
    thr = np.asarray(thresholds, dtype=np.int64)
    kernel = get_backend(backend)
    n = len(users)

    reps = []
    for rep in range(replications):
        rng = _replication_rng(seed, rep)
        accum = _run_replication(kernel, users, 1, frames, pol.THRESHOLD,
                                 None, thr, rng, chunk_frames)
        reps.append(_metrics_from_accum(accum, frames, n))

    aoii = np.array([r.avg_aoii for r in reps])
    active = np.array([r.active_share for r in reps])
    ddof = 1 if replications > 1 else 0
    return ThresholdSimReport(
        thresholds=tuple(int(t) for t in thr),
        frames=frames, replications=replications, seed=seed,
        backend=kernel.NAME, per_replication=tuple(reps),
        avg_aoii=float(aoii.mean()), std_aoii=float(aoii.std(ddof=ddof)),
        avg_active=float(active.mean()), std_active=float(active.std(ddof=ddof)),
    )
