"""Tests for configuration plumbing, launcher kinematics, and scenarios."""

import csv
import os

import pytest

from perchsim.config import (
    ConfigError,
    parse_config,
    serialize_config,
)
from perchsim.harness import (
    EXIT_CRITERIA_FAILED,
    EXIT_SUCCESS,
    LaunchProfile,
    RunConfig,
    Scenario,
    launch_profile,
    run_scenario,
    worker_count,
)
from perchsim.cli import main


class TestConfigFormat:
    def test_parse_basic_types(self):
        text = """
        # comment
        mission.launch_speed_mps = 4.0
        branch.diameter_m = 0.06
        mission.soft_branch = true
        run.label = nightly
        run.count = 3
        """
        cfg = parse_config(text)
        assert cfg["mission.launch_speed_mps"] == 4.0
        assert cfg["mission.soft_branch"] is True
        assert cfg["run.label"] == "nightly"
        assert cfg["run.count"] == 3

    def test_round_trip_identity(self):
        text = "b.y = 2.5\na.x = 1\nc.z = hello\nd.w = false\n"
        once = parse_config(text)
        again = parse_config(serialize_config(once))
        assert once == again
        # serialization itself is stable
        assert serialize_config(once) == serialize_config(again)

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("no equals sign here")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("a.b = 1\na.b = 2")

    def test_unknown_override_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(scenario=Scenario.FULL_PERCH,
                      overrides={"mission.warp_drive": 9})


class TestLaunchProfile:
    def test_published_rail(self):
        profile = launch_profile(4.0, 1.6)
        assert profile.acceleration_mps2 == 5.0

    def test_zero_speed(self):
        assert launch_profile(0.0, 1.6).acceleration_mps2 == 0.0

    def test_half_rail_doubles_acceleration(self):
        assert launch_profile(4.0, 0.8).acceleration_mps2 == 10.0

    def test_speed_cap(self):
        with pytest.raises(ConfigError):
            launch_profile(5.5, 1.6)

    def test_invalid_rail(self):
        with pytest.raises(ConfigError):
            launch_profile(4.0, 0.0)

    def test_defaults(self):
        profile = LaunchProfile()
        assert profile.lateral_offset_m == 0.4


class TestWorkerCount:
    def test_default_single(self, monkeypatch):
        monkeypatch.delenv("PERCHSIM_THREADS", raising=False)
        assert worker_count() == 1

    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("PERCHSIM_THREADS", "4")
        assert worker_count() == 4

    def test_invalid_env(self, monkeypatch):
        monkeypatch.setenv("PERCHSIM_THREADS", "many")
        with pytest.raises(ConfigError):
            worker_count()


def read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


class TestScenarios:
    def test_claw_sweep(self, tmp_path):
        code = run_scenario(RunConfig(Scenario.CLAW_SWEEP,
                                      out_dir=str(tmp_path)))
        assert code == EXIT_SUCCESS
        rows = read_csv(tmp_path / "claw_sweep.csv")
        assert rows[0] == ["diameter_m", "contact_force_n",
                           "holding_torque_nm"]
        assert len(rows) > 10

    def test_impact_suite(self, tmp_path):
        code = run_scenario(RunConfig(Scenario.IMPACT_SUITE,
                                      out_dir=str(tmp_path)))
        assert code == EXIT_SUCCESS
        rows = read_csv(tmp_path / "impact_suite.csv")
        peaks = [float(r[2]) for r in rows[1:]]
        assert max(peaks) < 150.0

    def test_envelope_emits_two_grids(self, tmp_path):
        code = run_scenario(RunConfig(Scenario.ENVELOPE,
                                      out_dir=str(tmp_path)))
        assert code == EXIT_SUCCESS
        assert (tmp_path / "envelope_speed.csv").exists()
        assert (tmp_path / "envelope_yaw.csv").exists()

    def test_optimize_log_monotone(self, tmp_path):
        code = run_scenario(RunConfig(Scenario.OPTIMIZE,
                                      out_dir=str(tmp_path)))
        assert code == EXIT_SUCCESS
        rows = read_csv(tmp_path / "pso_log.csv")
        costs = [float(r[1]) for r in rows[1:]]
        assert all(b <= a for a, b in zip(costs, costs[1:]))

    def test_launcher_profile(self, tmp_path):
        code = run_scenario(RunConfig(Scenario.LAUNCHER_PROFILE,
                                      out_dir=str(tmp_path)))
        assert code == EXIT_SUCCESS
        rows = read_csv(tmp_path / "launcher.csv")
        assert float(rows[1][2]) == 5.0

    def test_soft_branch_never_locks(self, tmp_path):
        code = run_scenario(RunConfig(Scenario.SOFT_BRANCH,
                                      out_dir=str(tmp_path)))
        assert code == EXIT_SUCCESS
        summary = (tmp_path / "summary.txt").read_text()
        assert "locked = False" in summary

    def test_full_perch_summary(self, tmp_path):
        code = run_scenario(RunConfig(Scenario.FULL_PERCH,
                                      out_dir=str(tmp_path)))
        assert code == EXIT_SUCCESS
        rows = read_csv(tmp_path / "ensemble.csv")
        assert rows[0][:2] == ["seed", "outcome"]
        perched = sum(r[1] == "Perched" for r in rows[1:])
        assert perched >= 6

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_scenario(RunConfig(Scenario.IMPACT_SUITE, out_dir=str(a)))
        run_scenario(RunConfig(Scenario.IMPACT_SUITE, out_dir=str(b)))
        assert (a / "impact_suite.csv").read_bytes() == \
            (b / "impact_suite.csv").read_bytes()


class TestCli:
    def test_exit_codes_config_error(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("mission.warp_drive = 9\n")
        code = main(["FullPerch", "--config", str(bad),
                     "--out", str(tmp_path)])
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        code = main(["FullPerch", "--config", str(tmp_path / "absent.cfg"),
                     "--out", str(tmp_path)])
        assert code == 2

    def test_launcher_profile_cli(self, tmp_path):
        code = main(["LauncherProfile", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "launcher.csv").exists()

    def test_config_override_applied(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("launcher.target_speed_mps = 3.0\n"
                       "launcher.rail_length_m = 0.9\n")
        code = main(["LauncherProfile", "--config", str(cfg),
                     "--out", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "launcher.csv")
        assert float(rows[1][2]) == pytest.approx(5.0)

    def test_overspeed_config_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("launcher.target_speed_mps = 5.5\n")
        code = main(["LauncherProfile", "--config", str(cfg),
                     "--out", str(tmp_path)])
        assert code == 2
