"""Per-user stochastic model for status-update scheduling.

Each user is a symmetric finite-state Markov source observed through an
unreliable channel and (optionally) a Bernoulli query process.  The
quantity tracked per user is the age of incorrect information (AoII):
the number of consecutive frames during which the receiver's estimate
has differed from the true source state.  Classic age of information
(AoI) is maintained alongside for the AoI-based baseline policies.

The AoII transition law is a two-point distribution: from age ``d`` the
next age is either ``0`` (receiver becomes correct) or ``d + 1``.  Both
an exact distribution view (`aoii_kernel`) and a sampling view
(`step_user`) are provided; the simulator backends reproduce the same
law from pre-drawn uniforms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import NamedTuple

EQ_TOL = 1e-9           # consistency tolerance when both p_remain and p_trans are given


class ParameterError(ValueError):
    """Invalid user parameters (out-of-range or inconsistent)."""


class DegenerateParameterError(ParameterError):
    """Parameters for which the closed-form analytics are undefined."""


class ModelAssumptionWarning(UserWarning):
    """The parameters leave the regime the analysis focuses on."""


class Action(IntEnum):
    IDLE = 0
    TRANSMIT = 1


@dataclass(frozen=True)
class UserParams:
    """Model parameters of one user.

    n_states:  number of source states (>= 2)
    p_remain:  probability the source keeps its state for one frame
    p_trans:   probability of moving to each specific other state
               (filled in by `validate` when omitted)
    p_success: probability a scheduled transmission is delivered
    q_query:   probability the destination queries this user in a frame
               (1.0 models the push-based setting)
    """

    n_states: int
    p_remain: float
    p_trans: float | None = None
    p_success: float = 1.0
    q_query: float = 1.0

    @property
    def p_fail(self) -> float:
        return 1.0 - self.p_success

    @property
    def derived(self) -> "DerivedConstants":
        return DerivedConstants.from_params(self)


@dataclass(frozen=True)
class DerivedConstants:
    """Age-growth probabilities of the two-point AoII law.

    a: probability the age keeps growing while the user transmits
    b: probability the age keeps growing while the user idles
    """

    a: float
    b: float

    @classmethod
    def from_params(cls, params: UserParams) -> "DerivedConstants":
        n, p_r, p_t = params.n_states, params.p_remain, params.p_trans
        if p_t is None:
            raise ParameterError("p_trans unset; run validate() first")
        p_s, p_f = params.p_success, params.p_fail
        a = p_r * p_f + (n - 2) * p_t + p_s * p_t
        b = p_r + (n - 2) * p_t
        return cls(a=a, b=b)


class UserState(NamedTuple):
    """Observable state of one user: current AoII, classic AoI, query flag."""

    aoii: int
    aoi: int = 1
    queried: bool = False


@dataclass
class NetworkState:
    """Joint state of all users at one frame."""

    users: tuple[UserState, ...]
    frame: int = 0


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ParameterError(f"{name}={value!r} is not a probability")


def validate(params: UserParams) -> UserParams:
    """Normalize and check user parameters.

    Fills in ``p_trans = (1 - p_remain) / (n_states - 1)`` when it was
    omitted; when both are supplied they must satisfy
    ``p_remain + (n_states - 1) * p_trans == 1`` within 1e-9, and
    p_trans is recomputed from p_remain so the identity holds exactly.
    Emits `ModelAssumptionWarning` when ``p_remain <= p_trans``: the
    analysis targets sources that are more likely to hold their state.
    """
    if not isinstance(params.n_states, int) or params.n_states < 2:
        raise ParameterError(f"n_states={params.n_states!r}; need an integer >= 2")
    _check_prob("p_remain", params.p_remain)
    _check_prob("p_success", params.p_success)
    _check_prob("q_query", params.q_query)

    n = params.n_states
    p_t = (1.0 - params.p_remain) / (n - 1)
    if params.p_trans is not None:
        _check_prob("p_trans", params.p_trans)
        residual = params.p_remain + (n - 1) * params.p_trans - 1.0
        if abs(residual) > EQ_TOL:
            raise ParameterError(
                f"p_remain + (n_states-1)*p_trans = {1.0 + residual!r}, expected 1")
    normalized = replace(params, p_trans=p_t)
    if normalized.p_remain <= p_t:
        warnings.warn(
            f"p_remain={normalized.p_remain} <= p_trans={p_t}: outside the "
            "persistent-source regime; index values may be non-positive",
            ModelAssumptionWarning, stacklevel=2)
    return normalized


def validate_all(users) -> tuple[UserParams, ...]:
    """Validate a roster, collapsing per-user regime warnings into one."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ModelAssumptionWarning)
        out = tuple(validate(u) for u in users)
    flagged = sum(issubclass(w.category, ModelAssumptionWarning) for w in caught)
    if flagged:
        warnings.warn(
            f"{flagged} of {len(out)} users have p_remain <= p_trans: outside "
            "the persistent-source regime; their index values may be non-positive",
            ModelAssumptionWarning, stacklevel=2)
    return out


def reset_probability(delta: int, action: int, params: UserParams) -> float:
    """Probability that the AoII drops to 0 on the next frame."""
    n, p_r, p_t = params.n_states, params.p_remain, params.p_trans
    if p_t is None:
        raise ParameterError("p_trans unset; run validate() first")
    if delta == 0:
        return p_r
    if action == Action.TRANSMIT:
        return p_r * params.p_success + params.p_fail * p_t
    return p_t


def aoii_kernel(delta: int, action: int, params: UserParams) -> dict[int, float]:
    """Exact one-step AoII distribution: ``{0: p_reset, delta+1: 1 - p_reset}``.

    The growth mass is constructed as the complement so the two masses
    sum to 1 exactly.
    """
    if delta < 0:
        raise ValueError(f"delta={delta} must be >= 0")
    p0 = reset_probability(delta, action, params)
    return {0: p0, delta + 1: 1.0 - p0}


def step_user(state: UserState, action: int, params: UserParams, rng) -> UserState:
    """Sample one frame of a single user's evolution.

    Draws the source move, the channel outcome (only when transmitting)
    and the next frame's query indicator from ``rng`` (anything with a
    ``random()`` method returning uniforms in [0, 1)).  The AoII update
    matches `aoii_kernel`; the AoI resets to 1 exactly on a delivered
    transmission.

    The source is never simulated explicitly: because of the symmetric
    transition structure only three events matter -- keep the state,
    move to the value the receiver last got, or move somewhere else --
    with probabilities (p_remain, p_trans, (n_states-2)*p_trans) when
    receiver and source disagree, and a (p_remain, rest) split when
    they agree.
    """
    p_t = params.p_trans
    if p_t is None:
        raise ParameterError("p_trans unset; run validate() first")
    p_r = params.p_remain

    success = False
    if action == Action.TRANSMIT:
        success = rng.random() < params.p_success

    u = rng.random()
    if state.aoii == 0:
        aoii = 0 if u < p_r else 1
    else:
        if success:
            correct = p_t <= u < p_t + p_r       # source kept the delivered value
        else:
            correct = u < p_t                    # source fell back to the last delivery
        aoii = 0 if correct else state.aoii + 1

    aoi = 1 if success else state.aoi + 1
    queried = rng.random() < params.q_query
    return UserState(aoii=aoii, aoi=aoi, queried=queried)
