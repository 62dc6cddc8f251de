"""Command-line front end.

Subcommands:

* ``preset NAME``  -- run a built-in scenario and write CSV + metadata
* ``run FILE``     -- run a scenario described by a TOML config file
* ``verify``       -- run the closed-form/oracle conformance suite
* ``index``        -- print index values for one parameter set
* ``bench``        -- time the compiled kernel against the Python one

Config file grammar (TOML, flat keys)::

    name = "custom"            # optional
    frames = 2000
    replications = 25
    seed = 20250               # optional
    n_states = 2               # optional, default 2
    policies = ["rr", "greedy", "wi-aoii", "wi-qaoii", "wi-aoi", "wi-qaoi"]
    m = [1, 2]                 # scalar or list; list means a channel sweep
    greedy_query_aware = false # optional

    [[users]]                  # explicit roster ...
    p_remain = 0.8
    p_success = 0.7
    q_query = 1.0              # optional, default 1
    p_trans = 0.2              # optional, derived from p_remain if absent

    [ramp]                     # ... or a generated one (mutually exclusive)
    user_counts = [2, 3, 4]    # list means a roster-size sweep
    p_remain = [0.05, 0.95]    # [start, stop], spaced evenly over the roster
    p_success = [0.95, 0.05]
    q_query = 1.0              # scalar or [start, stop]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:                          # Python 3.10
    import tomli as tomllib

from . import __version__
from ._backend import available_backends
from .bench import benchmark_backends, format_benchmark
from .model import UserParams, validate
from .policies import PolicyKind
from .scenarios import DEFAULT_SEED, PRESET_NAMES, Scenario, preset, run_scenario
from .verify import run_verification


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario from a TOML config file (grammar in module docstring)."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    if ("users" in raw) == ("ramp" in raw):
        raise ValueError("config needs exactly one of [[users]] or [ramp]")

    def span(value, key):
        if isinstance(value, (int, float)):
            return (float(value), float(value))
        if isinstance(value, list) and len(value) == 2:
            return (float(value[0]), float(value[1]))
        raise ValueError(f"{key} must be a scalar or a [start, stop] pair")

    m = raw.get("m", 1)
    m_values = tuple(int(v) for v in m) if isinstance(m, list) else (int(m),)
    common = dict(
        name=str(raw.get("name", Path(path).stem)),
        frames=int(raw["frames"]),
        replications=int(raw["replications"]),
        seed=int(raw.get("seed", DEFAULT_SEED)),
        n_states=int(raw.get("n_states", 2)),
        policies=tuple(PolicyKind.parse(p) for p in raw["policies"]),
        m_values=m_values,
        greedy_query_aware=bool(raw.get("greedy_query_aware", False)),
    )
    if "users" in raw:
        users = tuple(
            validate(UserParams(
                n_states=int(u.get("n_states", common["n_states"])),
                p_remain=float(u["p_remain"]),
                p_trans=float(u["p_trans"]) if "p_trans" in u else None,
                p_success=float(u.get("p_success", 1.0)),
                q_query=float(u.get("q_query", 1.0)),
            )) for u in raw["users"])
        return Scenario(users=users, **common)
    r = raw["ramp"]
    counts = r.get("user_counts", 1)
    user_counts = (tuple(int(c) for c in counts) if isinstance(counts, list)
                   else (int(counts),))
    return Scenario(user_counts=user_counts,
                    p_remain_ramp=span(r["p_remain"], "p_remain"),
                    p_success_ramp=span(r.get("p_success", 1.0), "p_success"),
                    q_query_ramp=span(r.get("q_query", 1.0), "q_query"),
                    **common)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="results", help="output directory for CSV/JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--reps", type=int, default=None, help="override replications")
    p.add_argument("--frames", type=int, default=None, help="override horizon")
    p.add_argument("--json", action="store_true", dest="json_mirror",
                   help="also mirror the CSV rows as JSON")
    p.add_argument("--backend", choices=("auto", "cython", "python"), default="auto")


def _print_scenario_result(result) -> None:
    print(f"scenario {result.scenario.name}: {len(result.reports)} runs "
          f"in {result.elapsed_s:.1f}s")
    for value, rep in result.reports:
        print(f"  {result.scenario.sweep_var}={value:<3} {rep.policy:<9} "
              f"aoii/user={rep.avg_aoii:.4f}  frame sum={rep.avg_frame_sum_aoii:.4f}  "
              f"qaoii={rep.avg_qaoii:.4f}")
    if result.csv_path:
        print(f"wrote {result.csv_path} and {result.meta_path}")


def _cmd_preset(args) -> int:
    scenario = preset(args.name).with_overrides(
        frames=args.frames, replications=args.reps, seed=args.seed,
        n_states=args.n_states)
    result = run_scenario(scenario, args.out, backend=args.backend,
                          json_mirror=args.json_mirror)
    _print_scenario_result(result)
    return 0


def _cmd_run(args) -> int:
    scenario = load_scenario(args.config).with_overrides(
        frames=args.frames, replications=args.reps, seed=args.seed)
    result = run_scenario(scenario, args.out, backend=args.backend,
                          json_mirror=args.json_mirror)
    _print_scenario_result(result)
    return 0


def _cmd_verify(args) -> int:
    report = run_verification(quick=args.quick, seed=args.seed)
    for line in report.summary_lines():
        print(line)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
        print(f"wrote {args.out}")
    return 0 if report.all_passed else 1


def _cmd_index(args) -> int:
    from . import analytics
    params = validate(UserParams(n_states=args.n_states, p_remain=args.p_remain,
                                 p_trans=args.p_trans, p_success=args.p_success,
                                 q_query=args.q))
    d = params.derived
    print(f"params: {params}")
    print(f"growth probabilities: a={d.a:.12g} (transmit), b={d.b:.12g} (idle)")
    header = f"{'delta':>6} {'index_aoii':>16} {'index_qaoii':>16}"
    if args.check:
        header += f" {'numeric':>16} {'rel_err':>10}"
    print(header)
    for delta in args.delta:
        wa = analytics.whittle_aoii_closed(params, delta)
        wq = analytics.whittle_qaoii_closed(params, delta)
        line = f"{delta:>6} {wa:>16.10g} {wq:>16.10g}"
        if args.check:
            num = analytics.whittle_numeric(params, delta)
            rel = abs(wa - num) / max(abs(num), 1e-12)
            line += f" {num:>16.10g} {rel:>10.2e}"
        print(line)
    return 0


def _cmd_bench(args) -> int:
    results = benchmark_backends(n_users=args.users, frames=args.frames,
                                 replications=args.reps, seed=args.seed or DEFAULT_SEED)
    print(format_benchmark(results))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoii-sched",
        description="Multi-user status-update scheduling: simulation, "
                    "index policies and steady-state analytics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preset", help="run a built-in experiment scenario")
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--n-states", type=int, default=None,
                   help="source states per user (default 2)")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_preset)

    p = sub.add_parser("run", help="run a scenario from a TOML config file")
    p.add_argument("config")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify", help="check closed forms against the oracles")
    p.add_argument("--out", default=None, help="write a JSON report here")
    p.add_argument("--quick", action="store_true", help="smaller sample counts")
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("index", help="print index values for one parameter set")
    p.add_argument("--p-remain", "--pR", dest="p_remain", type=float, required=True)
    p.add_argument("--p-trans", "--pt", dest="p_trans", type=float, default=None)
    p.add_argument("--n-states", "--N", dest="n_states", type=int, default=2)
    p.add_argument("--p-success", "--ps", dest="p_success", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--delta", type=int, nargs="+", required=True)
    p.add_argument("--check", action="store_true",
                   help="also print the definition-based numeric index")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("bench", help="compare the simulation kernels "
                                     f"(available: {', '.join(available_backends())})")
    p.add_argument("--users", type=int, default=16)
    p.add_argument("--frames", type=int, default=20_000)
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
