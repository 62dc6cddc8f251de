"""Scenario presets, CSV emission, config files and the CLI surface."""

import json
import warnings

import numpy as np
import pytest

from aoii_sched.cli import load_scenario, main
from aoii_sched.model import ModelAssumptionWarning, validate
from aoii_sched.scenarios import (
    PRESET_NAMES,
    load_csv,
    preset,
    ramp,
    run_scenario,
)


@pytest.fixture(autouse=True)
def _quiet_regime_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ModelAssumptionWarning)
        yield


def tiny(scenario):
    return scenario.with_overrides(frames=100, replications=2)


class TestPresets:
    def test_table1_roster(self):
        sc = preset("table1")
        assert [(u.p_remain, u.p_success, u.q_query) for u in sc.users] == [
            (0.05, 0.95, 0.20), (0.50, 0.50, 0.50), (0.95, 0.05, 0.80)]
        assert sc.m_values == (1,) and sc.frames == 2000
        assert sc.replications >= 100

    def test_fig3_ramp_values(self):
        sc = preset("fig3")
        roster = sc.roster(37)
        assert len(roster) == 37
        for i, u in enumerate(roster):
            assert u.p_remain == pytest.approx(0.05 + 0.025 * i, abs=1e-12)
            assert u.p_success == pytest.approx(0.95 - 0.025 * i, abs=1e-12)
        assert sc.m_values == tuple(range(1, 11))

    def test_fig2_shape(self):
        sc = preset("fig2")
        assert sc.user_counts == tuple(range(2, 10))
        assert sc.frames == 10_000
        assert len(sc.roster(2)) == 2

    def test_fig4_query_ramp_ascends(self):
        roster = preset("fig4").roster(5)
        qs = [u.q_query for u in roster]
        assert qs == sorted(qs) and qs[0] == pytest.approx(0.05)

    def test_fig5_query_ramp_descends(self):
        roster = preset("fig5").roster(37)
        qs = [u.q_query for u in roster]
        assert qs == sorted(qs, reverse=True)
        assert qs[0] == pytest.approx(0.95) and qs[-1] == pytest.approx(0.05)

    def test_all_presets_validate(self):
        for name in PRESET_NAMES:
            sc = preset(name)
            for _, roster, m in sc.points():
                assert len(roster) >= 1 and m >= 1
                for u in roster:
                    validate(u)

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            preset("fig9")

    def test_n_states_override(self):
        sc = preset("table1").with_overrides(n_states=4)
        assert all(u.n_states == 4 for u in sc.roster(3))
        for u in sc.roster(3):
            assert abs(u.p_remain + 3 * u.p_trans - 1.0) < 1e-12

    def test_ramp_helper(self):
        np.testing.assert_allclose(ramp(0.05, 0.95, 37)[1] - ramp(0.05, 0.95, 37)[0],
                                   0.025, atol=1e-12)


class TestRunScenario:
    def test_csv_round_trip(self, tmp_path):
        result = run_scenario(tiny(preset("table1")), tmp_path)
        rows = load_csv(result.csv_path)
        assert len(rows) == 4 * 4          # 4 policies x 4 metrics
        by_key = {(r["policy"], r["metric"]): r for r in rows}
        for value, rep in result.reports:
            for metric in ("aoii", "aoii_sum", "qaoii", "qaoii_sum"):
                row = by_key[(rep.policy, metric)]
                assert row["mean"] == rep.metric(metric)[0]   # exact round trip
                assert row["std"] == rep.metric(metric)[1]
                assert row["replications"] == 2

    def test_metadata_sidecar(self, tmp_path):
        result = run_scenario(tiny(preset("table1")), tmp_path)
        meta = json.loads(result.meta_path.read_text())
        assert meta["scenario"]["frames"] == 100
        assert meta["scenario"]["policies"] == ["rr", "greedy", "wi-aoii", "wi-qaoii"]
        assert "timestamp" in meta and "git" in meta

    def test_json_mirror(self, tmp_path):
        result = run_scenario(tiny(preset("table1")), tmp_path, json_mirror=True)
        mirrored = json.loads((tmp_path / "table1.json").read_text())
        assert len(mirrored) == len(load_csv(result.csv_path))

    def test_rerun_byte_identical(self, tmp_path):
        a = run_scenario(tiny(preset("table1")), tmp_path / "a")
        b = run_scenario(tiny(preset("table1")), tmp_path / "b")
        assert a.csv_path.read_bytes() == b.csv_path.read_bytes()

    def test_seed_changes_content(self, tmp_path):
        a = run_scenario(tiny(preset("table1")), tmp_path / "a")
        b = run_scenario(tiny(preset("table1")).with_overrides(seed=1), tmp_path / "b")
        assert a.csv_path.read_bytes() != b.csv_path.read_bytes()

    def test_user_sweep_rows(self, tmp_path):
        sc = preset("fig2").with_overrides(frames=50, replications=1)
        result = run_scenario(sc, tmp_path)
        rows = load_csv(result.csv_path)
        assert {r["sweep_var"] for r in rows} == {"n_users"}
        assert {r["sweep_value"] for r in rows} == set(range(2, 10))


CONFIG_USERS = """
frames = 120
replications = 2
seed = 9
policies = ["rr", "greedy"]
m = 1

[[users]]
p_remain = 0.8
p_success = 0.7

[[users]]
p_remain = 0.9
p_success = 0.4
q_query = 0.5
"""

CONFIG_RAMP = """
name = "sweepy"
frames = 80
replications = 2
policies = ["rr", "wi-aoii"]
m = [1, 2]

[ramp]
user_counts = 5
p_remain = [0.55, 0.95]
p_success = [0.9, 0.3]
q_query = 1.0
"""


class TestConfigFiles:
    def test_explicit_users(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text(CONFIG_USERS)
        sc = load_scenario(cfg)
        assert sc.name == "exp" and len(sc.users) == 2
        assert sc.users[1].q_query == 0.5
        assert sc.seed == 9

    def test_ramp_roster(self, tmp_path):
        cfg = tmp_path / "sweep.toml"
        cfg.write_text(CONFIG_RAMP)
        sc = load_scenario(cfg)
        assert sc.name == "sweepy"
        assert sc.m_values == (1, 2)
        roster = sc.roster(5)
        assert roster[0].p_remain == pytest.approx(0.55)
        assert roster[-1].p_success == pytest.approx(0.3)

    def test_both_rosters_rejected(self, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(CONFIG_USERS + "\n[ramp]\np_remain = 0.5\n")
        with pytest.raises(ValueError, match="exactly one"):
            load_scenario(cfg)

    def test_runs_end_to_end(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text(CONFIG_USERS)
        assert main(["run", str(cfg), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "exp.csv").exists()


class TestCli:
    def test_preset_command(self, tmp_path, capsys):
        rc = main(["preset", "table1", "--frames", "100", "--reps", "2",
                   "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "wi-aoii" in out and "wrote" in out
        assert (tmp_path / "table1.csv").exists()

    def test_preset_json_flag(self, tmp_path):
        main(["preset", "table1", "--frames", "50", "--reps", "1", "--json",
              "--out", str(tmp_path)])
        assert (tmp_path / "table1.json").exists()

    def test_index_command(self, capsys):
        rc = main(["index", "--p-remain", "0.8", "--p-success", "0.7",
                   "--delta", "1", "3", "--check"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "index_aoii" in out and "rel_err" in out

    def test_verify_quick(self, tmp_path, capsys):
        report = tmp_path / "report.json"
        rc = main(["verify", "--quick", "--out", str(report)])
        assert rc == 0
        payload = json.loads(report.read_text())
        assert payload["all_passed"]
        names = {c["name"] for c in payload["checks"]}
        assert "steady_state_closed_vs_oracle" in names
        for check in payload["checks"]:
            assert "tolerance" in check and "worst_error" in check
        assert "PASS" in capsys.readouterr().out

    def test_bench_smoke(self, capsys):
        rc = main(["bench", "--users", "3", "--frames", "400", "--reps", "1"])
        assert rc == 0
        assert "backend" in capsys.readouterr().out

    def test_unknown_preset_rejected(self):
        with pytest.raises(SystemExit):
            main(["preset", "fig9"])

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
