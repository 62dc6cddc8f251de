"""Scheduling policies: pick at most m of the n users to transmit each frame.

All policies share one decision interface (`decide`) and, except for
round robin, reduce to "rank users by a scalar priority and take the
top m", with ties broken toward the lowest user index so decisions are
reproducible.  Index policies read their priorities from per-user
lookup tables over the age value; tables grow on demand and are
memoized per parameter set so repeated simulations stay cheap.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import analytics
from .model import NetworkState, UserParams, UserState, validate

TABLE_CACHE_HORIZON = 16384     # memoize per-user index tables up to this age


class PolicyKind(str, Enum):
    ROUND_ROBIN = "rr"
    GREEDY_AOII = "greedy"
    WHITTLE_AOII = "wi-aoii"
    WHITTLE_QAOII = "wi-qaoii"
    WHITTLE_AOI = "wi-aoi"
    WHITTLE_QAOI = "wi-qaoi"

    @classmethod
    def parse(cls, name: str) -> "PolicyKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown policy {name!r}; expected one of: {valid}") from None


INDEX_POLICIES = (PolicyKind.WHITTLE_AOII, PolicyKind.WHITTLE_QAOII,
                  PolicyKind.WHITTLE_AOI, PolicyKind.WHITTLE_QAOI)
AOI_POLICIES = (PolicyKind.WHITTLE_AOI, PolicyKind.WHITTLE_QAOI)


@dataclass(frozen=True)
class Decision:
    """Users activated this frame (ascending indices, at most m of them)."""

    selected: tuple[int, ...]


@dataclass
class PolicyMemory:
    """Caller-owned state a policy carries across frames (round-robin cursor)."""

    rr_cursor: int = 0
    greedy_query_aware: bool = False
    tables: dict = field(default_factory=dict)


def top_m(priorities: Sequence[float], m: int) -> list[int]:
    """Indices of the m largest priorities; equal values go to the lower index."""
    order = sorted(range(len(priorities)), key=lambda i: (-priorities[i], i))
    return order[:m]


def index_value(kind: PolicyKind, user_state: UserState, params: UserParams) -> float:
    """Scalar priority one index policy assigns to one user.

    A zero AoII maps to priority 0 for the AoII-based policies: there
    is nothing incorrect to refresh, and transmitting cannot change the
    age law in that state.
    """
    if kind not in INDEX_POLICIES:
        raise ValueError(f"{kind} is not an index policy")
    if kind is PolicyKind.WHITTLE_AOII:
        if user_state.aoii == 0:
            return 0.0
        return analytics.whittle_aoii_closed(params, user_state.aoii)
    if kind is PolicyKind.WHITTLE_QAOII:
        if user_state.aoii == 0:
            return 0.0
        return analytics.whittle_qaoii_closed(params, user_state.aoii)
    base = analytics.aoi_whittle_numeric(params.p_success, user_state.aoi)
    if kind is PolicyKind.WHITTLE_QAOI:
        return params.q_query * base
    return base


def decide(kind: PolicyKind, state: NetworkState, params: Sequence[UserParams],
           m: int, memory: PolicyMemory) -> Decision:
    """Select the users to activate this frame.

    Exactly ``min(m, n_users)`` users are always chosen: idling a slot
    never helps under these dynamics, and activating a zero-age user is
    harmless because its age law ignores the action.  If ``m`` exceeds
    the user count it is clamped with a warning.
    """
    n = len(state.users)
    if len(params) != n:
        raise ValueError(f"{len(params)} parameter sets for {n} users")
    if m < 1:
        raise ValueError(f"m={m} must be >= 1")
    if m > n:
        warnings.warn(f"m={m} exceeds the {n} users; clamping", stacklevel=2)
        m = n

    if kind is PolicyKind.ROUND_ROBIN:
        picks = sorted((memory.rr_cursor + j) % n for j in range(m))
        memory.rr_cursor = (memory.rr_cursor + m) % n
        return Decision(selected=tuple(picks))

    if kind is PolicyKind.GREEDY_AOII:
        if memory.greedy_query_aware:
            prios = [u.aoii if u.queried else 0 for u in state.users]
        else:
            prios = [u.aoii for u in state.users]
    else:
        prios = [index_value(kind, u, p) for u, p in zip(state.users, params)]
    return Decision(selected=tuple(sorted(top_m(prios, m))))


# ---------------------------------------------------------------------------
# priority tables for the simulation kernels
# ---------------------------------------------------------------------------

# kernel policy codes, shared by the compiled and pure-Python backends
RR = 0
GREEDY = 1
GREEDY_QAWARE = 2
TABLE_DELTA = 3
TABLE_AOI = 4
THRESHOLD = 5


def kernel_code(kind: PolicyKind, greedy_query_aware: bool = False) -> int:
    if kind is PolicyKind.ROUND_ROBIN:
        return RR
    if kind is PolicyKind.GREEDY_AOII:
        return GREEDY_QAWARE if greedy_query_aware else GREEDY
    if kind in AOI_POLICIES:
        return TABLE_AOI
    return TABLE_DELTA


_table_cache: dict = {}
_table_lock = threading.Lock()


def _fill_columns(kind: PolicyKind, params: UserParams, ages: np.ndarray) -> np.ndarray:
    """Priority of one user at each age in ``ages`` (ages >= 1)."""
    if kind is PolicyKind.WHITTLE_AOII:
        return analytics._whittle_aoii_values(params, ages)
    if kind is PolicyKind.WHITTLE_QAOII:
        return analytics._whittle_qaoii_values(params, ages)
    vals = np.array([analytics.aoi_whittle_numeric(params.p_success, int(h))
                     for h in ages])
    if kind is PolicyKind.WHITTLE_QAOI:
        vals = params.q_query * vals
    return vals


def _user_column(kind: PolicyKind, params: UserParams, length: int) -> np.ndarray:
    """Cached priorities of one user for ages 0..length-1 (age 0 priced at 0)."""
    key = (kind, params)
    with _table_lock:
        cached = _table_cache.get(key)
    if cached is None or cached.size < length:
        size = max(length, 64)
        col = np.zeros(size, dtype=np.float64)
        col[1:] = _fill_columns(kind, params, np.arange(1, size))
        if not np.all(np.isfinite(col)):
            raise analytics.DegenerateParameterError(
                "index table contains non-finite priorities")
        if size <= TABLE_CACHE_HORIZON:
            with _table_lock:
                _table_cache[key] = col
        cached = col
    return cached[:length]


class PriorityTable:
    """Per-user priority lookup used inside the simulation kernels.

    ``array[i, age]`` is user i's priority at that age; `grow` extends
    every row at least to ``min_len`` entries (doubling) and returns
    the new array, which the kernels re-bind on the fly.
    """

    def __init__(self, kind: PolicyKind, params: Sequence[UserParams],
                 length: int = 64):
        self.kind = kind
        self.params = tuple(validate(p) if p.p_trans is None else p for p in params)
        self.array = np.empty((0, 0))
        self.grow(length)

    def grow(self, min_len: int) -> np.ndarray:
        length = max(min_len + 1, 2 * self.array.shape[1], 64)
        rows = [_user_column(self.kind, p, length) for p in self.params]
        self.array = np.ascontiguousarray(np.stack(rows))
        return self.array
