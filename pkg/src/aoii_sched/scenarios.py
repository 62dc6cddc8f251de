"""Experiment scenarios: parameter rosters, sweeps and CSV emission.

A scenario either carries an explicit user roster or generates one from
linear ramps (evenly spaced per-user values between two endpoints), and
sweeps either the roster size or the number of per-frame channels.
Presets reproduce the reference experiments:

* ``fig2``  -- 2..9 users, one channel, push-based AoII comparison
* ``fig3``  -- 37 users, 1..10 channels, push-based AoII comparison
* ``fig4``  -- 2..9 users, one channel, query-aware comparison
* ``fig5``  -- 37 users, 1..10 channels, query-aware comparison
* ``table1`` -- 3 fixed heterogeneous users, one channel, both metrics

Every run writes one CSV of replication means plus a JSON sidecar with
the full configuration echo; identical seeds yield byte-identical CSV.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .model import UserParams, validate_all
from .policies import PolicyKind
from .simulate import SimConfig, SimReport, run

DEFAULT_SEED = 20250
AOII_POLICIES = (PolicyKind.ROUND_ROBIN, PolicyKind.GREEDY_AOII,
                 PolicyKind.WHITTLE_AOI, PolicyKind.WHITTLE_AOII)
QAOII_POLICIES = (PolicyKind.ROUND_ROBIN, PolicyKind.GREEDY_AOII,
                  PolicyKind.WHITTLE_QAOI, PolicyKind.WHITTLE_QAOII)

CSV_COLUMNS = ("scenario", "sweep_var", "sweep_value", "policy", "metric",
               "mean", "std", "replications", "seed")
METRICS = ("aoii_sum", "aoii", "qaoii", "qaoii_sum")


def ramp(start: float, stop: float, count: int) -> np.ndarray:
    """Per-user values evenly spaced from start to stop."""
    return np.linspace(start, stop, count)


@dataclass(frozen=True)
class Scenario:
    name: str
    frames: int
    replications: int
    policies: tuple[PolicyKind, ...]
    seed: int = DEFAULT_SEED
    n_states: int = 2
    users: tuple[UserParams, ...] | None = None
    user_counts: tuple[int, ...] = ()
    m_values: tuple[int, ...] = (1,)
    p_remain_ramp: tuple[float, float] = (0.05, 0.95)
    p_success_ramp: tuple[float, float] = (0.95, 0.05)
    q_query_ramp: tuple[float, float] = (1.0, 1.0)
    greedy_query_aware: bool = False

    @property
    def sweep_var(self) -> str:
        if len(self.user_counts) > 1:
            return "n_users"
        if len(self.m_values) > 1:
            return "m"
        return "point"

    def roster(self, count: int) -> tuple[UserParams, ...]:
        """The user roster for one sweep point (validated)."""
        if self.users is not None:
            return validate_all(self.users)
        p_r = ramp(*self.p_remain_ramp, count)
        p_s = ramp(*self.p_success_ramp, count)
        q = ramp(*self.q_query_ramp, count)
        return validate_all(UserParams(n_states=self.n_states, p_remain=float(r),
                                       p_success=float(s), q_query=float(qq))
                            for r, s, qq in zip(p_r, p_s, q))

    def points(self) -> Iterator[tuple[int, tuple[UserParams, ...], int]]:
        """Yield (sweep value, roster, m) for every cell of the sweep."""
        counts = self.user_counts or (len(self.users or ()) or 1,)
        if len(counts) > 1:
            for c in counts:
                yield c, self.roster(c), self.m_values[0]
        else:
            roster = self.roster(counts[0])
            for m in self.m_values:
                yield m, roster, m

    def with_overrides(self, frames: int | None = None, replications: int | None = None,
                       seed: int | None = None, n_states: int | None = None) -> "Scenario":
        changes = {}
        if frames is not None:
            changes["frames"] = frames
        if replications is not None:
            changes["replications"] = replications
        if seed is not None:
            changes["seed"] = seed
        if n_states is not None:
            if self.users is not None:
                changes["users"] = tuple(dataclasses.replace(u, n_states=n_states,
                                                             p_trans=None)
                                         for u in self.users)
            changes["n_states"] = n_states
        return dataclasses.replace(self, **changes)


PRESET_NAMES = ("fig2", "fig3", "fig4", "fig5", "table1")


def preset(name: str) -> Scenario:
    """A ready-made scenario by name (see module docstring)."""
    if name == "fig2":
        return Scenario(name=name, frames=10_000, replications=25,
                        policies=AOII_POLICIES, user_counts=tuple(range(2, 10)))
    if name == "fig3":
        return Scenario(name=name, frames=2_000, replications=25,
                        policies=AOII_POLICIES, user_counts=(37,),
                        m_values=tuple(range(1, 11)))
    if name == "fig4":
        return Scenario(name=name, frames=1_000, replications=25,
                        policies=QAOII_POLICIES, user_counts=tuple(range(2, 10)),
                        q_query_ramp=(0.05, 0.95))
    if name == "fig5":
        return Scenario(name=name, frames=2_000, replications=25,
                        policies=QAOII_POLICIES, user_counts=(37,),
                        m_values=tuple(range(1, 11)), q_query_ramp=(0.95, 0.05))
    if name == "table1":
        users = (UserParams(n_states=2, p_remain=0.05, p_success=0.95, q_query=0.20),
                 UserParams(n_states=2, p_remain=0.50, p_success=0.50, q_query=0.50),
                 UserParams(n_states=2, p_remain=0.95, p_success=0.05, q_query=0.80))
        return Scenario(name=name, frames=2_000, replications=200,
                        policies=(PolicyKind.ROUND_ROBIN, PolicyKind.GREEDY_AOII,
                                  PolicyKind.WHITTLE_AOII, PolicyKind.WHITTLE_QAOII),
                        users=users)
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    reports: tuple[tuple[int, SimReport], ...]   # (sweep value, report) per cell/policy
    csv_path: Path | None
    meta_path: Path | None
    elapsed_s: float

    def report(self, sweep_value: int, policy: PolicyKind) -> SimReport:
        for val, rep in self.reports:
            if val == sweep_value and rep.policy == policy.value:
                return rep
        raise KeyError(f"no report for sweep={sweep_value}, policy={policy.value}")


def run_points(scenario: Scenario, backend: str | None = None
               ) -> tuple[tuple[int, SimReport], ...]:
    """Simulate every (sweep cell, policy) pair of a scenario.

    All cells and policies share the scenario seed, so policy
    comparisons run on common random numbers.
    """
    out = []
    for value, roster, m in scenario.points():
        for kind in scenario.policies:
            cfg = SimConfig(users=roster, m=m, frames=scenario.frames,
                            replications=scenario.replications,
                            seed=scenario.seed, policy=kind,
                            greedy_query_aware=scenario.greedy_query_aware,
                            backend=backend)
            out.append((value, run(cfg)))
    return tuple(out)


def _git_describe() -> str:
    try:
        return subprocess.run(["git", "describe", "--always", "--dirty"],
                              capture_output=True, text=True, timeout=5,
                              check=False).stdout.strip() or "unknown"
    except OSError:
        return "unknown"


def _rows(scenario: Scenario, reports) -> list[dict]:
    rows = []
    for value, rep in reports:
        for metric in METRICS:
            mean, std = rep.metric(metric)
            rows.append({
                "scenario": scenario.name,
                "sweep_var": scenario.sweep_var,
                "sweep_value": value,
                "policy": rep.policy,
                "metric": metric,
                "mean": repr(mean),
                "std": repr(std),
                "replications": rep.replications,
                "seed": rep.seed,
            })
    return rows


def run_scenario(scenario: Scenario, out_dir: str | Path | None,
                 backend: str | None = None, json_mirror: bool = False
                 ) -> ScenarioResult:
    """Run a scenario and write ``<name>.csv`` plus a JSON metadata sidecar.

    The CSV carries only seed-determined content (byte-identical across
    reruns); volatile fields such as the timestamp live in the sidecar.
    """
    start = time.perf_counter()
    reports = run_points(scenario, backend=backend)
    elapsed = time.perf_counter() - start

    csv_path = meta_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = _rows(scenario, reports)
        csv_path = out_dir / f"{scenario.name}.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        if json_mirror:
            with open(out_dir / f"{scenario.name}.json", "w") as fh:
                json.dump(rows, fh, indent=2)
        meta_path = out_dir / f"{scenario.name}.meta.json"
        meta = {
            "scenario": _scenario_dict(scenario),
            "backend": reports[0][1].backend if reports else None,
            "elapsed_s": elapsed,
            "git": _git_describe(),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "assumptions": [
                "ramp endpoints 5%..95% spaced evenly over the roster",
                "metric 'aoii_sum' is the per-frame sum over users, 'aoii' the "
                "per-user per-frame mean, 'qaoii' the per-query mean, "
                "'qaoii_sum' the per-frame sum of queried ages",
            ],
        }
        with open(meta_path, "w") as fh:
            json.dump(meta, fh, indent=2)
    return ScenarioResult(scenario=scenario, reports=reports, csv_path=csv_path,
                          meta_path=meta_path, elapsed_s=elapsed)


def _scenario_dict(scenario: Scenario) -> dict:
    d = dataclasses.asdict(scenario)
    d["policies"] = [p.value for p in scenario.policies]
    return d


def load_csv(path: str | Path) -> list[dict]:
    """Parse a scenario CSV back into typed records (exact float round-trip)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            row["sweep_value"] = int(row["sweep_value"])
            row["mean"] = float(row["mean"])
            row["std"] = float(row["std"])
            row["replications"] = int(row["replications"])
            row["seed"] = int(row["seed"])
            out.append(row)
    return out
