"""Multi-user status-update scheduling toolkit.

Models users whose freshness penalty is the age of incorrect
information (frames since the receiver's estimate last matched the
source), with an optional query process that samples the penalty only
when the destination asks.  Provides exact per-user dynamics, steady-
state analytics with independent numerical oracles, closed-form index
scheduling policies plus baselines, a replicated slot-based simulator
with a compiled hot loop, and experiment presets with CSV output.
"""

from ._backend import HAVE_CYTHON, available_backends, get_backend
from .analytics import (
    DegenerateParameterError,
    RviResult,
    StationaryDist,
    ThresholdStats,
    aoi_threshold_stats,
    aoi_whittle_numeric,
    avg_active_closed,
    avg_aoii_closed,
    avg_qaoii_closed,
    indexability_check,
    rvi_threshold_check,
    stationary_solve,
    threshold_stats,
    whittle_aoii_closed,
    whittle_numeric,
    whittle_qaoii_closed,
)
from .model import (
    Action,
    DerivedConstants,
    ModelAssumptionWarning,
    NetworkState,
    ParameterError,
    UserParams,
    UserState,
    aoii_kernel,
    reset_probability,
    step_user,
    validate,
)
from .policies import Decision, PolicyKind, PolicyMemory, decide, index_value
from .scenarios import Scenario, preset, run_scenario
from .simulate import (
    SimConfig,
    SimReport,
    Trace,
    metric_timeseries,
    run,
    run_threshold,
)
from .verify import run_verification

__version__ = "0.1.0"

__all__ = [
    "Action", "Decision", "DegenerateParameterError", "DerivedConstants",
    "HAVE_CYTHON", "ModelAssumptionWarning", "NetworkState", "ParameterError",
    "PolicyKind", "PolicyMemory", "RviResult", "Scenario", "SimConfig",
    "SimReport", "StationaryDist", "ThresholdStats", "Trace", "UserParams",
    "UserState", "aoi_threshold_stats", "aoi_whittle_numeric", "aoii_kernel",
    "available_backends", "avg_active_closed", "avg_aoii_closed",
    "avg_qaoii_closed", "decide", "get_backend", "indexability_check",
    "index_value", "metric_timeseries", "preset", "reset_probability", "run",
    "run_scenario", "run_threshold", "run_verification", "rvi_threshold_check",
    "stationary_solve", "step_user", "threshold_stats", "validate",
    "whittle_aoii_closed", "whittle_numeric", "whittle_qaoii_closed",
]
