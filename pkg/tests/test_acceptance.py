"""Acceptance criteria, one test per criterion, tolerances pinned.

Each test prints one PASS/FAIL line per sub-check and fails if any
sub-check fails.  Three criteria (table1 ordering/proximity, the
channel-sweep trends, and the query-awareness benefit) contain legs the
implemented dynamics provably cannot satisfy; they are asserted as
stated anyway and left failing, with the mechanism explained in the
docstrings of the tests concerned.
"""

import math
import time
import warnings

import numpy as np
import pytest

from aoii_sched import analytics
from aoii_sched.model import ModelAssumptionWarning
from aoii_sched.scenarios import preset, run_points, run_scenario
from aoii_sched.simulate import run_threshold
from aoii_sched.verify import sample_params

warnings.simplefilter("ignore", ModelAssumptionWarning)

REFERENCE_AOII = {"rr": 12.587, "greedy": 11.726, "wi-aoii": 7.820}
REFERENCE_QAOII = {"rr": 9.035, "greedy": 7.924, "wi-qaoii": 6.765}
PROXIMITY_BAND = 0.35


class Criterion:
    def __init__(self, name):
        self.name = name
        self.rows = []

    def check(self, label, ok, detail=""):
        self.rows.append((label, bool(ok), detail))

    def conclude(self):
        failed = [r for r in self.rows if not r[1]]
        for label, ok, detail in self.rows:
            print(f"[{'PASS' if ok else 'FAIL'}] {self.name} :: {label}"
                  + (f" ({detail})" if detail else ""))
        assert not failed, (
            f"{self.name}: {len(failed)}/{len(self.rows)} sub-checks failed: "
            + "; ".join(f"{label} ({detail})" for label, _, detail in failed))


def ci95(mean, std, reps):
    half = 1.96 * std / math.sqrt(reps)
    return mean - half, mean + half


@pytest.fixture(scope="module")
def table1_reports():
    # >= 100 replications demanded; 600 resolves the QAoII CI separation
    scenario = preset("table1").with_overrides(replications=600)
    return {rep.policy: rep for _, rep in run_points(scenario)}


def test_criterion_1_steady_state_equivalence():
    """Closed-form average age / active share vs. the balance-equation oracle:
    1e-10 absolute on >= 200 random samples, under 10 s."""
    crit = Criterion("closed-form/oracle equivalence")
    rng = np.random.default_rng(20240)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        p = sample_params(rng)
        n = int(rng.integers(1, 41))
        stats = analytics.threshold_stats(p, n)
        worst = max(worst,
                    abs(analytics.avg_aoii_closed(p, n) - stats.avg_cost),
                    abs(analytics.avg_active_closed(p, n) - stats.avg_active))
    elapsed = time.perf_counter() - start
    crit.check("max |closed - oracle| < 1e-10 over 200 samples", worst < 1e-10,
               f"worst {worst:.3g}")
    crit.check("runtime < 10 s", elapsed < 10.0, f"{elapsed:.2f}s")
    crit.conclude()


def test_criterion_2_index_equivalence():
    """Closed-form indices vs. the definition-based ratio (1e-8 relative),
    query variant proportionality (1e-9 relative), under 30 s."""
    crit = Criterion("index equivalence")
    rng = np.random.default_rng(20241)
    start = time.perf_counter()
    worst_rel = worst_prop = 0.0
    for _ in range(200):
        p = sample_params(rng)
        d = int(rng.integers(1, 26))
        ref = analytics.whittle_numeric(p, d)
        ref_q = analytics.whittle_numeric(p, d, cost_scale=p.q_query)
        wa = analytics.whittle_aoii_closed(p, d)
        wq = analytics.whittle_qaoii_closed(p, d)
        floor = 1e-10 / 1e-8
        worst_rel = max(worst_rel,
                        abs(wa - ref) / max(abs(ref), floor),
                        abs(wq - ref_q) / max(abs(ref_q), floor))
        worst_prop = max(worst_prop,
                         abs(wq - p.q_query * wa) / max(abs(p.q_query * wa), 1e-12))
    elapsed = time.perf_counter() - start
    crit.check("closed vs numeric within 1e-8 relative (1e-10 floor)",
               worst_rel < 1e-8, f"worst {worst_rel:.3g}")
    crit.check("query index = q * plain index within 1e-9 relative",
               worst_prop < 1e-9, f"worst {worst_prop:.3g}")
    crit.check("runtime < 30 s", elapsed < 30.0, f"{elapsed:.2f}s")
    crit.conclude()


def test_criterion_3_indexability():
    """Active share strictly decreasing for thresholds 1..50 on every sample."""
    crit = Criterion("indexability")
    rng = np.random.default_rng(20242)
    violations = 0
    for _ in range(200):
        ok, _ = analytics.indexability_check(sample_params(rng), 50)
        violations += not ok
    crit.check("zero violations over 200 samples, n=1..50", violations == 0,
               f"{violations} violations")
    crit.conclude()


def test_criterion_4_threshold_structure():
    """Priced-problem optima are threshold policies on 30 random (params,
    price) pairs; price flip points bracket the numeric index; < 2 min."""
    crit = Criterion("threshold optimality (RVI)")
    rng = np.random.default_rng(20243)
    start = time.perf_counter()
    non_threshold = 0
    bracket_misses = 0
    for _ in range(30):
        p = sample_params(rng)
        price = float(rng.uniform(0.0, 40.0))
        res = analytics.rvi_threshold_check(p, price, delta_cap=200)
        if not (res.converged and res.is_threshold):
            non_threshold += 1
            continue
        state = int(rng.integers(1, 13))
        wi = analytics.whittle_numeric(p, state)
        lo, hi = analytics.rvi_flip_price(p, state, delta_cap=200, rel_tol=1e-3)
        slack = 1e-3 * (1.0 + abs(wi))
        if not (lo - slack <= wi <= hi + slack):
            bracket_misses += 1
    elapsed = time.perf_counter() - start
    crit.check("30/30 threshold-type optimal policies", non_threshold == 0,
               f"{non_threshold} failures")
    crit.check("price flips bracket the numeric index", bracket_misses == 0,
               f"{bracket_misses} misses")
    crit.check("runtime < 2 min at delta_cap=200", elapsed < 120.0, f"{elapsed:.1f}s")
    crit.conclude()


def test_criterion_5_single_user_convergence():
    """Forced-threshold time averages match the closed forms within 3
    standard errors (25 replications x 1e5 frames)."""
    from aoii_sched.model import UserParams, validate

    crit = Criterion("single-user convergence")
    combos = [
        (validate(UserParams(2, 0.8, p_success=0.7)), 2),
        (validate(UserParams(3, 0.6, p_success=0.5)), 4),
        (validate(UserParams(2, 0.99, p_success=0.999)), 3),
    ]
    for params, n in combos:
        rep = run_threshold(params, n, frames=100_000, replications=25, seed=2024)
        pairs = (("avg age", rep.avg_aoii, analytics.avg_aoii_closed(params, n),
                  rep.stderr("aoii")),
                 ("active share", rep.avg_active, analytics.avg_active_closed(params, n),
                  rep.stderr("active")))
        for label, got, want, se in pairs:
            z = abs(got - want) / se
            crit.check(f"N={params.n_states} p_R={params.p_remain} n={n} {label} "
                       "within 3 SE", z <= 3.0, f"|z|={z:.2f}")
    crit.conclude()


def test_criterion_6_table1_ordering_and_proximity(table1_reports):
    """Mean AoII and QAoII order WI < GP < RR with non-overlapping 95% CIs;
    values within +-35% of the reference table.

    The AoII ordering leg and the QAoII proximity legs cannot hold under
    the modeled transition law: transmitting a user with p_remain <
    p_trans lowers its reset probability (from p_trans to p_remain *
    p_success + p_fail * p_trans), and greedy locks onto exactly those
    users, so GP lands above RR on mean AoII; the per-query averages sit
    far below the reference scale for the same reason.
    """
    crit = Criterion("table1 ordering/proximity")
    reps = table1_reports

    def ordered(metric, order):
        spans = {pol: ci95(*reps[pol].metric(metric), reps[pol].replications)
                 for pol in order}
        ok = all(spans[a][1] < spans[b][0] for a, b in zip(order, order[1:]))
        detail = ", ".join(f"{pol} {reps[pol].metric(metric)[0]:.3f}"
                           for pol in order)
        return ok, detail

    ok, detail = ordered("aoii_sum", ("wi-aoii", "greedy", "rr"))
    crit.check("mean AoII: WI < GP < RR with separated CIs", ok, detail)
    ok, detail = ordered("qaoii", ("wi-qaoii", "greedy", "rr"))
    crit.check("mean QAoII: WI < GP < RR with separated CIs", ok, detail)

    for pol, target in REFERENCE_AOII.items():
        got = reps[pol].metric("aoii_sum")[0]
        ok = abs(got - target) <= PROXIMITY_BAND * target
        crit.check(f"AoII {pol} within +-35% of {target}", ok, f"got {got:.3f}")
    for pol, target in REFERENCE_QAOII.items():
        got = reps[pol].metric("qaoii")[0]
        ok = abs(got - target) <= PROXIMITY_BAND * target
        crit.check(f"QAoII {pol} within +-35% of {target}", ok, f"got {got:.3f}")
    crit.conclude()


def _trend_rows(scenario, metric):
    rows = {}
    for value, rep in run_points(scenario):
        rows.setdefault(rep.policy, {})[value] = rep.metric(metric)[0]
    return rows


def _series(rows, policy):
    by = rows[policy]
    return [by[k] for k in sorted(by)]


def test_criterion_7_user_sweep_trends():
    """fig2/fig4: mean age grows with the user count for every policy and
    the matching index policy is lowest at every point; < 10 min each."""
    crit = Criterion("figure trends (user sweep)")
    for name, metric, wi in (("fig2", "aoii_sum", "wi-aoii"),
                             ("fig4", "qaoii_sum", "wi-qaoii")):
        start = time.perf_counter()
        rows = _trend_rows(preset(name), metric)
        elapsed = time.perf_counter() - start
        for pol in rows:
            vals = _series(rows, pol)
            crit.check(f"{name}: {pol} increasing in n_users",
                       all(b > a for a, b in zip(vals, vals[1:])),
                       " ".join(f"{v:.2f}" for v in vals))
        keys = sorted(rows[wi])
        crit.check(f"{name}: {wi} lowest at every point",
                   all(rows[wi][k] <= min(rows[p][k] for p in rows) for k in keys))
        crit.check(f"{name}: runtime < 10 min", elapsed < 600.0, f"{elapsed:.1f}s")
    # the per-query average must also be won by the query-aware index policy
    rows_q = _trend_rows(preset("fig4"), "qaoii")
    keys = sorted(rows_q["wi-qaoii"])
    crit.check("fig4: wi-qaoii lowest under per-query normalization too",
               all(rows_q["wi-qaoii"][k] <= min(rows_q[p][k] for p in rows_q)
                   for k in keys))
    crit.conclude()


def test_criterion_7_channel_sweep_trends():
    """fig3/fig5: mean age nonincreasing in m, index policy lowest, and the
    WI-GP gap shrinking as m grows.

    The nonincreasing and gap legs cannot hold for RR/GP under the
    modeled transition law: extra channels force more transmissions of
    p_remain < p_trans users, which raises their age.
    """
    crit = Criterion("figure trends (channel sweep)")
    for name, metric, wi in (("fig3", "aoii_sum", "wi-aoii"),
                             ("fig5", "qaoii", "wi-qaoii")):
        start = time.perf_counter()
        rows = _trend_rows(preset(name), metric)
        elapsed = time.perf_counter() - start
        for pol in rows:
            vals = _series(rows, pol)
            crit.check(f"{name}: {pol} nonincreasing in m",
                       all(b <= a for a, b in zip(vals, vals[1:])),
                       " ".join(f"{v:.2f}" for v in vals))
        keys = sorted(rows[wi])
        crit.check(f"{name}: {wi} lowest at every point",
                   all(rows[wi][k] <= min(rows[p][k] for p in rows) for k in keys))
        gap_first = rows["greedy"][keys[0]] - rows[wi][keys[0]]
        gap_last = rows["greedy"][keys[-1]] - rows[wi][keys[-1]]
        crit.check(f"{name}: WI-GP gap shrinks as m grows", gap_last < gap_first,
                   f"{gap_first:.2f} -> {gap_last:.2f}")
        crit.check(f"{name}: runtime < 10 min", elapsed < 600.0, f"{elapsed:.1f}s")
    crit.conclude()


def test_criterion_8_query_awareness_benefit(table1_reports):
    """Relative metric reduction from query awareness on table1: GP in
    [0.15, 0.50], WI in [0.05, 0.30].

    Unattainable under the modeled transition law: the measured
    reductions are ~0.70 (GP) and ~0.55 (WI) with two source states.
    """
    crit = Criterion("query-awareness benefit")
    reps = table1_reports
    gp_aoii = reps["greedy"].metric("aoii_sum")[0]
    gp_q = reps["greedy"].metric("qaoii")[0]
    gp_red = (gp_aoii - gp_q) / gp_aoii
    wi_aoii = reps["wi-aoii"].metric("aoii_sum")[0]
    wi_q = reps["wi-qaoii"].metric("qaoii")[0]
    wi_red = (wi_aoii - wi_q) / wi_aoii

    def half_ci(rep, metric):
        mean, std = rep.metric(metric)
        return 1.96 * std / math.sqrt(rep.replications)

    crit.check("GP reduction in [0.15, 0.50]", 0.15 <= gp_red <= 0.50,
               f"got {gp_red:.3f} (CI half-widths {half_ci(reps['greedy'], 'aoii_sum'):.3f}/"
               f"{half_ci(reps['greedy'], 'qaoii'):.3f})")
    crit.check("WI reduction in [0.05, 0.30]", 0.05 <= wi_red <= 0.30,
               f"got {wi_red:.3f} (CI half-widths {half_ci(reps['wi-aoii'], 'aoii_sum'):.3f}/"
               f"{half_ci(reps['wi-qaoii'], 'qaoii'):.3f})")
    crit.conclude()


def test_criterion_9_csv_determinism(tmp_path):
    """Identical seeds give byte-identical CSV payloads across two runs."""
    crit = Criterion("determinism")
    scenario = preset("table1").with_overrides(replications=25)
    a = run_scenario(scenario, tmp_path / "a")
    b = run_scenario(scenario, tmp_path / "b")
    crit.check("two runs, same seed, identical CSV bytes",
               a.csv_path.read_bytes() == b.csv_path.read_bytes())
    crit.conclude()
