"""Steady-state analytics and index computation for threshold policies.

A threshold policy transmits exactly when the AoII is at least ``n``.
Under such a policy a single user's AoII is a birth-reset Markov chain:
from age 0 it moves to 1 with probability ``(n_states-1)*p_trans``,
from age k >= 1 it either resets to 0 or grows to k+1, with the growth
probability ``b`` below the threshold (idle) and ``a`` at or above it
(transmitting).

Two independent routes are implemented for every steady-state quantity:

* closed-form expressions (`avg_aoii_closed`, `avg_active_closed`,
  `whittle_aoii_closed`, `whittle_qaoii_closed`), evaluated exactly as
  derived, and
* numerical oracles that solve the chain's balance equations state by
  state and aggregate with compensated summation (`stationary_solve`,
  `threshold_stats`, `whittle_numeric`), plus a relative-value-
  iteration solver for the underlying average-cost decision problem
  (`rvi_threshold_check`).

The oracles never reuse the closed-form algebra, so agreement between
the two routes is a real check, not a tautology.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import DegenerateParameterError, UserParams, validate

TAIL_EPS = 1e-14        # truncate the geometric tail below this relative mass
K_MAX_CAP = 100_000     # hard cap on the truncated state space


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdStats:
    """Steady-state summary of one user under a threshold policy."""

    threshold: int
    avg_cost: float         # long-run average AoII
    avg_active: float       # long-run share of frames spent transmitting


@dataclass(frozen=True)
class StationaryDist:
    """Truncated stationary distribution of the AoII chain.

    ``masses[k]`` is the stationary probability of age ``k`` for
    ``k <= k_max``; ``tail_mass`` is the (analytically summed) leftover
    probability beyond ``k_max`` and ``tail_age_mass`` the matching
    age-weighted leftover, so means stay exact despite truncation.
    """

    masses: np.ndarray
    tail_mass: float
    tail_age_mass: float
    threshold: int | None
    k_max: int

    def total(self) -> float:
        return float(math.fsum(self.masses) + self.tail_mass)

    def mean(self) -> float:
        ks = np.arange(self.masses.size, dtype=np.float64)
        return float(math.fsum(ks * self.masses) + self.tail_age_mass)

    def mass_at_least(self, k: int) -> float:
        return float(math.fsum(self.masses[k:]) + self.tail_mass)


@dataclass(frozen=True)
class RviResult:
    """Optimal actions of the priced single-user problem on a capped state space."""

    actions: np.ndarray     # 0/1 per age 0..delta_cap
    is_threshold: bool      # idle below some age, transmit from it on
    threshold: int | None   # first transmitting age, None if always idle
    scheduling_price: float
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# parameter plumbing
# ---------------------------------------------------------------------------

def _prepared(params: UserParams) -> UserParams:
    return params if params.p_trans is not None else validate(params)


def _closed_form_constants(params: UserParams) -> tuple[int, float, float, float]:
    """(n_states, p_trans, a, b) after rejecting degenerate inputs.

    The closed forms divide by (1-a), (1-b) and p_trans, and lose all
    meaning on a dead channel, so p_trans = 0 and p_success = 0 are
    rejected here while the numerical oracles still run where defined.
    """
    params = _prepared(params)
    if params.p_trans <= 0.0:
        raise DegenerateParameterError("p_trans = 0: the source never mixes")
    if params.p_success <= 0.0:
        raise DegenerateParameterError("p_success = 0: transmissions never deliver")
    d = params.derived
    if d.b >= 1.0 or d.a >= 1.0:
        raise DegenerateParameterError(f"growth probabilities a={d.a}, b={d.b} reach 1")
    return params.n_states, params.p_trans, d.a, d.b


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def avg_aoii_closed(params: UserParams, threshold: int) -> float:
    """Closed-form long-run average AoII under a threshold policy."""
    if threshold < 1:
        raise ValueError(f"threshold={threshold} must be >= 1")
    n_states, p_t, a, b = _closed_form_constants(params)
    w = (n_states - 1) * p_t
    n = threshold
    num = ((1.0 + b**n * (n * b - n - 1.0)) / (1.0 - b) ** 2
           + b ** (n - 1) * a * (n + 1.0 / (1.0 - a)) / (1.0 - a))
    den = 1.0 + w * (1.0 - b**n) / (1.0 - b) + w * a * b ** (n - 1) / (1.0 - a)
    return w * num / den


def avg_active_closed(params: UserParams, threshold: int) -> float:
    """Closed-form long-run share of transmitting frames under a threshold policy."""
    if threshold < 1:
        raise ValueError(f"threshold={threshold} must be >= 1")
    n_states, p_t, a, b = _closed_form_constants(params)
    w = (n_states - 1) * p_t
    n = threshold
    den = 1.0 + w * (1.0 - b**n) / (1.0 - b) + w * a * b ** (n - 1) / (1.0 - a)
    return w * b ** (n - 1) / ((1.0 - a) * den)


def avg_qaoii_closed(params: UserParams, threshold: int) -> float:
    """Average query-sampled AoII: the plain average scaled by the query rate."""
    params = _prepared(params)
    return params.q_query * avg_aoii_closed(params, threshold)


def _whittle_aoii_values(params: UserParams, deltas: np.ndarray) -> np.ndarray:
    """Vectorized closed-form AoII index over an array of ages >= 1.

    The first factor is written with ``b**(-delta)`` in the derivation;
    that overflows for small b and large delta, so its bracket is kept
    in b**delta scale and the division is applied to the last, tail-
    sized factor instead (algebraically identical).
    """
    n_states, p_t, a, b = _closed_form_constants(params)
    n = float(n_states)
    w = (n - 1.0) * p_t
    d = deltas.astype(np.float64)

    denom = (a - 1.0) * (b - 1.0) ** 2 * p_t * (b - n * p_t + p_t - 1.0)
    if abs(denom) < 1e-300:
        raise DegenerateParameterError(f"index denominator {denom} vanishes")

    b_d = b**d
    b_dm1 = b ** (d - 1.0)
    b_dp1 = b ** (d + 1.0)
    if np.any(b_d == 0.0):
        raise DegenerateParameterError(
            "b**delta underflows; index not evaluable in double precision here")

    x_scaled = (a * w * b_d + (a - 1.0) * b**2
                - (a - 1.0) * b * (w + 1.0) - w * b_dp1)
    y = (a * (w * b_d + b - n * p_t + p_t - 1.0)
         - w * b_dp1 - b + n * p_t - p_t + 1.0)
    z1 = (p_t * (a * (-a * d + d + 1.0) * b_dm1 / (a - 1.0) ** 2
                 + (((b - 1.0) * d - 1.0) * b_d + 1.0) / (b - 1.0) ** 2)
          / (-a * w * b_dm1 / (a - 1.0)
             - (n - 1.0) * (p_t * (1.0 - b_d)) / (b - 1.0) + 1.0))
    z2 = (p_t * (((b * d + b - d - 2.0) * b_dp1 + 1.0) / (b - 1.0) ** 2
                 - a * (a * d + a - d - 2.0) * b_d / (a - 1.0) ** 2)
          / (-a * w * b_d / (a - 1.0)
             - (n - 1.0) * (p_t * (1.0 - b_dp1)) / (b - 1.0) + 1.0))
    return -x_scaled * y * ((z1 - z2) / b_d) / denom


def whittle_aoii_closed(params: UserParams, delta: int) -> float:
    """Closed-form index of age ``delta`` for the plain AoII objective.

    Equals the steady-state cost difference between thresholds
    ``delta+1`` and ``delta`` divided by the active-time difference
    between thresholds ``delta`` and ``delta+1``.
    """
    if delta < 1:
        raise ValueError(f"delta={delta} must be >= 1")
    out = _whittle_aoii_values(params, np.asarray([delta]))
    return float(out[0])


def _whittle_qaoii_values(params: UserParams, deltas: np.ndarray) -> np.ndarray:
    """Vectorized closed-form query-aware index over an array of ages >= 1."""
    params = _prepared(params)
    n_states, p_t, a, b = _closed_form_constants(params)
    n = float(n_states)
    w = (n - 1.0) * p_t
    q = params.q_query
    d = deltas.astype(np.float64)

    denom = (a - 1.0) * (b - 1.0) ** 2 * (b - n * p_t + p_t - 1.0)
    if abs(denom) < 1e-300:
        raise DegenerateParameterError(f"index denominator {denom} vanishes")

    b_d = b**d
    b_dp1 = b ** (d + 1.0)
    x = (a * w * b_d + b**2 * ((a - 1.0) * d - 1.0)
         - b * ((a - 1.0) * d - 1.0) * (w + 2.0))
    y = ((a - 1.0) * d * (w + 1.0) - a * n * p_t + a * p_t - w * b_dp1 - 1.0)
    return q * (a - b) * (x + y) / denom


def whittle_qaoii_closed(params: UserParams, delta: int) -> float:
    """Closed-form index for the query-sampled objective; scales with q_query."""
    if delta < 1:
        raise ValueError(f"delta={delta} must be >= 1")
    out = _whittle_qaoii_values(params, np.asarray([delta]))
    return float(out[0])


# ---------------------------------------------------------------------------
# numerical oracles
# ---------------------------------------------------------------------------

def default_k_max(params: UserParams, threshold: int | None) -> int:
    """Smallest truncation point whose geometric tail is below TAIL_EPS."""
    params = _prepared(params)
    d = params.derived
    ratio = d.b if threshold is None else max(d.a, d.b)
    base = 1 if threshold is None else threshold
    if ratio <= 0.0:
        return base + 2
    if ratio >= 1.0:
        return K_MAX_CAP
    need = base + int(math.ceil(math.log(TAIL_EPS) / math.log(ratio))) + 2
    return min(max(need, base + 8), K_MAX_CAP)


def stationary_solve(params: UserParams, threshold: int | None,
                     k_max: int | None = None) -> StationaryDist:
    """Solve the balance equations of the threshold chain state by state.

    The chain is a pure birth-reset chain, so each state's stationary
    mass follows from the previous one: unnormalized, ``u_0 = 1``,
    ``u_k = u_{k-1} * g_{k-1}`` with growth probability ``g_0 =
    (n_states-1)*p_trans``, ``g_k = b`` for ``1 <= k < threshold`` and
    ``g_k = a`` beyond.  ``threshold=None`` solves the never-transmit
    chain.  The tail above ``k_max`` is geometric and folded in
    analytically; a warning is issued if the requested truncation
    leaves more than TAIL_EPS relative tail mass.
    """
    params = _prepared(params)
    d = params.derived
    a, b = d.a, d.b
    w = (params.n_states - 1) * params.p_trans
    if k_max is None:
        k_max = default_k_max(params, threshold)
    n = k_max if threshold is None else threshold
    if n < 1:
        raise ValueError(f"threshold={threshold} must be >= 1")
    n = min(n, k_max)

    # unnormalized masses: u_0 = 1, u_k = w * b^(k-1) for 1 <= k <= n,
    # u_k = w * b^(n-1) * a^(k-n) for k > n
    u = np.empty(k_max + 1, dtype=np.float64)
    u[0] = 1.0
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    below = ks <= n
    u[1:][below] = w * b ** (ks[below] - 1.0)
    u[1:][~below] = w * b ** (n - 1.0) * a ** (ks[~below] - n)

    tail_ratio = a if threshold is not None else b
    if tail_ratio >= 1.0:
        if u[-1] > 0.0:
            raise DegenerateParameterError(
                "geometric tail does not converge (growth probability reaches 1)")
        tail_u = tail_age_u = 0.0
    else:
        # sum_{j>=1} u_last r^j  and  sum_{j>=1} (k_max+j) u_last r^j
        r = tail_ratio
        tail_u = u[-1] * r / (1.0 - r)
        tail_age_u = u[-1] * (k_max * r / (1.0 - r) + r / (1.0 - r) ** 2)

    total = math.fsum(u) + tail_u
    if tail_u > TAIL_EPS * total:
        warnings.warn(f"truncation at k_max={k_max} leaves relative tail mass "
                      f"{tail_u / total:.3g} (folded in analytically)", stacklevel=2)
    return StationaryDist(masses=u / total, tail_mass=tail_u / total,
                          tail_age_mass=tail_age_u / total,
                          threshold=threshold, k_max=k_max)


def threshold_stats(params: UserParams, threshold: int,
                    k_max: int | None = None) -> ThresholdStats:
    """Average AoII and active share under a threshold policy, from the oracle."""
    dist = stationary_solve(params, threshold, k_max)
    return ThresholdStats(threshold=threshold,
                          avg_cost=dist.mean(),
                          avg_active=dist.mass_at_least(threshold))


def whittle_numeric(params: UserParams, delta: int, cost_scale: float = 1.0) -> float:
    """Definition-based index: cost difference over active-time difference.

    Both steady states come from `stationary_solve`, never from the
    closed forms, so this is an independent cross-check of
    `whittle_aoii_closed` (with ``cost_scale=1``) and of
    `whittle_qaoii_closed` (with ``cost_scale=q_query``).
    """
    if delta < 1:
        raise ValueError(f"delta={delta} must be >= 1")
    lo = threshold_stats(params, delta)
    hi = threshold_stats(params, delta + 1)
    d_active = lo.avg_active - hi.avg_active
    if d_active < 1e-14:
        raise DegenerateParameterError(
            f"active time does not decrease at threshold {delta} "
            f"(difference {d_active}); indexability violated")
    # ratio first, then scale: keeps the result exactly linear in cost_scale
    return cost_scale * ((hi.avg_cost - lo.avg_cost) / d_active)


def indexability_check(params: UserParams, n_max: int) -> tuple[bool, int | None]:
    """Verify the active share strictly decreases in the threshold.

    Returns ``(True, None)`` when Ā(1) > Ā(2) > ... > Ā(n_max), else
    ``(False, n)`` with ``n`` the first threshold whose active share
    fails to drop.
    """
    _closed_form_constants(params)     # reject degenerate inputs up front
    prev = threshold_stats(params, 1).avg_active
    for n in range(2, n_max + 1):
        cur = threshold_stats(params, n).avg_active
        if not cur < prev:
            return False, n - 1
        prev = cur
    return True, None


# ---------------------------------------------------------------------------
# relative value iteration on the priced single-user problem
# ---------------------------------------------------------------------------

def rvi_threshold_check(params: UserParams, scheduling_price: float,
                        delta_cap: int = 200, tol: float = 1e-10,
                        max_iter: int = 500_000) -> RviResult:
    """Solve the average-cost problem with per-transmission price by RVI.

    State is the AoII capped at ``delta_cap`` (growth saturates at the
    cap); instantaneous cost is ``age + price * action``.  Iterates the
    relative value function until its update span falls below ``tol``
    and reports the optimal action per state plus whether the policy
    has threshold structure.  Ties prefer idling, so a zero price
    transmits from every positive age but not at age zero.
    """
    params = _prepared(params)
    if scheduling_price < 0.0:
        raise ValueError("scheduling_price must be >= 0")
    if delta_cap < 50:
        raise ValueError(f"delta_cap={delta_cap} too small to judge structure")
    p_r, p_t = params.p_remain, params.p_trans
    reset_tx_pos = p_r * params.p_success + params.p_fail * p_t

    states = np.arange(delta_cap + 1)
    reset_idle = np.full(delta_cap + 1, p_t)
    reset_idle[0] = p_r
    reset_tx = np.full(delta_cap + 1, reset_tx_pos)
    reset_tx[0] = p_r
    up = np.minimum(states + 1, delta_cap)
    cost = states.astype(np.float64)

    v = np.zeros(delta_cap + 1)
    q_idle = np.empty_like(v)
    q_tx = np.empty_like(v)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        vu = v[up]
        q_idle = cost + reset_idle * v[0] + (1.0 - reset_idle) * vu
        q_tx = cost + scheduling_price + reset_tx * v[0] + (1.0 - reset_tx) * vu
        v_new = np.minimum(q_idle, q_tx)
        v_new -= v_new[0]
        diff = v_new - v
        if diff.max() - diff.min() < tol:
            v = v_new
            converged = True
            break
        v = v_new
    if not converged:
        warnings.warn(f"relative value iteration did not reach span {tol} "
                      f"within {max_iter} iterations", stacklevel=2)

    actions = (q_tx < q_idle).astype(np.int8)
    first = int(np.argmax(actions)) if actions.any() else None
    is_threshold = bool(np.all(np.diff(actions.astype(np.int16)) >= 0))
    return RviResult(actions=actions, is_threshold=is_threshold, threshold=first,
                     scheduling_price=scheduling_price, iterations=iterations,
                     converged=converged)


def rvi_flip_price(params: UserParams, state: int, delta_cap: int = 200,
                   lo: float = 0.0, hi: float | None = None,
                   rel_tol: float = 1e-3, rvi_tol: float = 1e-9) -> tuple[float, float]:
    """Bisect the transmission price at which ``state`` flips to idle.

    Returns the final bracket ``(lo, hi)``: transmit is optimal at
    ``lo`` and idle at ``hi``.  Warm-starts each solve with the
    previous value function.
    """
    if hi is None:
        hi = 4.0 * whittle_numeric(params, state) + 10.0

    def transmits(price):
        res = rvi_threshold_check(params, price, delta_cap, tol=rvi_tol)
        return bool(res.actions[state])

    if not transmits(lo) or transmits(hi):
        raise RuntimeError(f"bracket [{lo}, {hi}] does not straddle the flip")
    while hi - lo > rel_tol * (1.0 + hi):
        mid = 0.5 * (lo + hi)
        if transmits(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


# ---------------------------------------------------------------------------
# classic-AoI baseline index (numeric only)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _aoi_tail_sums(p_success: float) -> tuple[float, float]:
    """Numeric tail sums of the failure-run distribution.

    T0 = sum_j (1-p)^j and T1 = sum_j j (1-p)^j over j >= 0, truncated
    where the terms drop below TAIL_EPS.
    """
    if not 0.0 < p_success <= 1.0:
        raise DegenerateParameterError(f"p_success={p_success} must be in (0, 1]")
    r = 1.0 - p_success
    if r == 0.0:
        return 1.0, 0.0
    j_max = int(math.ceil(math.log(TAIL_EPS) / math.log(r))) + 2
    js = np.arange(j_max + 1, dtype=np.float64)
    pw = r**js
    return float(math.fsum(pw)), float(math.fsum(js * pw))


def aoi_threshold_stats(p_success: float, threshold: int) -> ThresholdStats:
    """Steady state of the classic-AoI chain under a threshold policy.

    The AoI moves 1 -> 2 -> ... deterministically until the threshold,
    then resets to 1 with probability ``p_success`` per attempt; the
    stationary masses are 1 for ages below the threshold and a
    geometric run of failures above it.
    """
    if threshold < 1:
        raise ValueError(f"threshold={threshold} must be >= 1")
    t0, t1 = _aoi_tail_sums(p_success)
    n = threshold
    total = (n - 1) + t0
    age_sum = n * (n - 1) / 2.0 + n * t0 + t1
    return ThresholdStats(threshold=n, avg_cost=age_sum / total,
                          avg_active=t0 / total)


@lru_cache(maxsize=None)
def aoi_whittle_numeric(p_success: float, aoi: int) -> float:
    """Numeric index of the classic-AoI baseline at age ``aoi``."""
    if aoi < 1:
        raise ValueError(f"aoi={aoi} must be >= 1")
    lo = aoi_threshold_stats(p_success, aoi)
    hi = aoi_threshold_stats(p_success, aoi + 1)
    d_active = lo.avg_active - hi.avg_active
    if d_active <= 0.0:
        raise DegenerateParameterError(
            f"AoI chain active time not decreasing at threshold {aoi}")
    return (hi.avg_cost - lo.avg_cost) / d_active
