"""Self-verification: closed forms against their numerical oracles.

Draws random parameter sets in the supported regime and checks, with
explicit tolerances,

* steady-state averages (closed form vs. balance-equation solver),
* index values (closed form vs. definition-based ratio),
* query/plain index proportionality,
* strict decrease of the active share in the threshold (indexability),
* threshold structure of the priced problem and agreement between its
  price flip points and the index values.

Returns a machine-readable report; the CLI serializes it to JSON and
exits nonzero when any check fails.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import analytics
from .model import UserParams, validate

N_STATES_POOL = (2, 3, 4, 8)


@dataclass
class CheckResult:
    name: str
    passed: bool
    samples: int
    tolerance: str
    worst_error: float
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"all_passed": self.all_passed,
                "checks": [asdict(c) for c in self.checks]}

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name}: worst error {c.worst_error:.3g} "
                         f"(tolerance {c.tolerance}, {c.samples} samples)"
                         + (f" -- {c.detail}" if c.detail else ""))
        return lines


def sample_params(rng: np.random.Generator, n_states: int | None = None,
                  with_query: bool = True) -> UserParams:
    """A random parameter set in the persistent-source regime.

    p_trans in [0.01, 0.45] subject to p_remain > p_trans, p_success in
    [0.05, 1].
    """
    n = int(n_states if n_states is not None else rng.choice(N_STATES_POOL))
    hi = min(0.45, 1.0 / n - 0.005)
    p_t = float(rng.uniform(0.01, hi))
    p_r = 1.0 - (n - 1) * p_t
    p_s = float(rng.uniform(0.05, 1.0))
    q = float(rng.uniform(0.05, 1.0)) if with_query else 1.0
    return validate(UserParams(n_states=n, p_remain=p_r, p_success=p_s, q_query=q))


def check_steady_state(samples: int = 200, seed: int = 2024,
                       tol: float = 1e-10) -> CheckResult:
    """Closed-form average age and active share vs. the stationary solver."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    bad = ""
    for _ in range(samples):
        p = sample_params(rng)
        n = int(rng.integers(1, 41))
        stats = analytics.threshold_stats(p, n)
        e_cost = abs(analytics.avg_aoii_closed(p, n) - stats.avg_cost)
        e_act = abs(analytics.avg_active_closed(p, n) - stats.avg_active)
        err = max(e_cost, e_act)
        if err > worst:
            worst, bad = err, f"params={p}, n={n}"
    return CheckResult("steady_state_closed_vs_oracle", worst < tol, samples,
                       f"abs {tol}", worst, bad if worst >= tol else "")


def check_index_equivalence(samples: int = 200, seed: int = 2025,
                            rel_tol: float = 1e-8, abs_floor: float = 1e-10,
                            aoii_closed_fn=None, qaoii_closed_fn=None,
                            delta_max: int = 25) -> CheckResult:
    """Closed-form indices vs. the definition-based numeric ratio."""
    aoii_closed_fn = aoii_closed_fn or analytics.whittle_aoii_closed
    qaoii_closed_fn = qaoii_closed_fn or analytics.whittle_qaoii_closed
    rng = np.random.default_rng(seed)
    worst = 0.0
    bad = ""
    for _ in range(samples):
        p = sample_params(rng)
        d = int(rng.integers(1, delta_max + 1))
        ref = analytics.whittle_numeric(p, d)
        ref_q = analytics.whittle_numeric(p, d, cost_scale=p.q_query)
        for closed, target in ((aoii_closed_fn(p, d), ref),
                               (qaoii_closed_fn(p, d), ref_q)):
            err = abs(closed - target) / max(abs(target), abs_floor / rel_tol)
            if err > worst:
                worst, bad = err, f"params={p}, delta={d}"
    return CheckResult("index_closed_vs_numeric", worst < rel_tol, samples,
                       f"rel {rel_tol} (abs floor {abs_floor})", worst,
                       bad if worst >= rel_tol else "")


def check_proportionality(samples: int = 200, seed: int = 2026,
                          rel_tol: float = 1e-9) -> CheckResult:
    """Query-aware index equals q times the plain index."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = sample_params(rng)
        d = int(rng.integers(1, 26))
        w = analytics.whittle_aoii_closed(p, d)
        wq = analytics.whittle_qaoii_closed(p, d)
        err = abs(wq - p.q_query * w) / max(abs(p.q_query * w), 1e-12)
        worst = max(worst, err)
    return CheckResult("query_index_proportionality", worst < rel_tol, samples,
                       f"rel {rel_tol}", worst)


def check_indexability(samples: int = 40, seed: int = 2027,
                       n_max: int = 50) -> CheckResult:
    """Active share strictly decreasing in the threshold for every sample."""
    rng = np.random.default_rng(seed)
    failures = 0
    detail = ""
    for _ in range(samples):
        p = sample_params(rng)
        ok, first_bad = analytics.indexability_check(p, n_max)
        if not ok:
            failures += 1
            detail = f"params={p} violates at n={first_bad}"
    return CheckResult("indexability_active_share_decreasing", failures == 0,
                       samples, f"strict decrease, n=1..{n_max}", float(failures),
                       detail)


def check_threshold_structure(samples: int = 10, seed: int = 2028,
                              delta_cap: int = 200,
                              flip_rel_tol: float = 5e-3) -> CheckResult:
    """Priced-problem optima are threshold policies; flips bracket the index."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = 0
    detail = ""
    for _ in range(samples):
        p = sample_params(rng)
        price = float(rng.uniform(0.0, 50.0))
        res = analytics.rvi_threshold_check(p, price, delta_cap)
        if not (res.converged and res.is_threshold):
            failures += 1
            detail = f"non-threshold or unconverged at params={p}, price={price}"
            continue
        state = int(rng.integers(1, 16))
        wi = analytics.whittle_numeric(p, state)
        lo, hi = analytics.rvi_flip_price(p, state, delta_cap,
                                          rel_tol=flip_rel_tol)
        slack = flip_rel_tol * (1.0 + abs(wi))
        err = max(0.0, lo - wi, wi - hi)
        worst = max(worst, err)
        if err > slack:
            failures += 1
            detail = (f"flip bracket [{lo:.6g}, {hi:.6g}] misses index {wi:.6g} "
                      f"at params={p}, state={state}")
    return CheckResult("priced_problem_threshold_structure", failures == 0,
                       samples, f"bracket within rel {flip_rel_tol}", worst, detail)


def run_verification(quick: bool = False, seed: int = 2024) -> VerificationReport:
    """Run every conformance check; `quick` shrinks the sample counts."""
    n = 40 if quick else 200
    report = VerificationReport()
    report.checks.append(check_steady_state(samples=n, seed=seed))
    report.checks.append(check_index_equivalence(samples=n, seed=seed + 1))
    report.checks.append(check_proportionality(samples=n, seed=seed + 2))
    report.checks.append(check_indexability(samples=8 if quick else 40,
                                            seed=seed + 3))
    report.checks.append(check_threshold_structure(samples=3 if quick else 10,
                                                   seed=seed + 4))
    return report
