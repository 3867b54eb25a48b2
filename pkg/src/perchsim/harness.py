"""Experiment orchestration: scenarios, launcher kinematics, CSV reports.

Each scenario runs one canned experiment (claw sweep, impact suite, flight
test, perch ensemble, touchdown envelopes, leg-design optimization, or
launcher profile), writes deterministic CSV artifacts plus a plain-text
summary, and reports whether its success criteria were met.
"""

from __future__ import annotations

import csv
import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import claw as clawmod
from . import leg as legmod
from .autopilot import MissionConfig, MissionResult, run_ensemble, run_mission
from .claw import BranchSpec, ClawGeometry, SpringSpec
from .config import ConfigError, Value
from .pso import PsoConfig, pso_minimize
from .touchdown import PerchOutcome, sweep_envelope

__all__ = [
    "Scenario",
    "RunConfig",
    "LaunchProfile",
    "launch_profile",
    "run_scenario",
    "ConfigError",
    "EXIT_SUCCESS",
    "EXIT_CRITERIA_FAILED",
    "EXIT_CONFIG_ERROR",
    "worker_count",
]

EXIT_SUCCESS = 0
EXIT_CRITERIA_FAILED = 1
EXIT_CONFIG_ERROR = 2

LAUNCH_SPEED_CAP_MPS = 5.0


class Scenario(enum.Enum):
    CLAW_SWEEP = "ClawSweep"
    IMPACT_SUITE = "ImpactSuite"
    FLIGHT_ONLY = "FlightOnly"
    SOFT_BRANCH = "SoftBranch"
    FULL_PERCH = "FullPerch"
    ENVELOPE = "Envelope"
    OPTIMIZE = "Optimize"
    LAUNCHER_PROFILE = "LauncherProfile"


# Override keys accepted in config files, mapped onto mission defaults.
KNOWN_OVERRIDES = frozenset({
    "mission.launch_speed_mps",
    "mission.pitch_setpoint_deg",
    "mission.altitude_setpoint_m",
    "mission.launch_lateral_offset_m",
    "mission.launch_altitude_offset_m",
    "mission.disturbance_sigma_force_n",
    "mission.disturbance_sigma_moment_nm",
    "mission.soft_branch",
    "branch.diameter_m",
    "branch.x_m",
    "branch.z_m",
    "branch.axis_yaw_deg",
    "launcher.target_speed_mps",
    "launcher.rail_length_m",
})


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    out_dir: str = "."
    seed: int = 0
    overrides: Dict[str, Value] = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.overrides) - KNOWN_OVERRIDES
        if unknown:
            raise ConfigError(
                f"unknown config keys: {', '.join(sorted(unknown))}")


@dataclass(frozen=True)
class LaunchProfile:
    target_speed_mps: float = 4.0
    rail_length_m: float = 1.6
    acceleration_mps2: float = 5.0
    lateral_offset_m: float = 0.4


def launch_profile(target_speed_mps: float,
                   rail_length_m: float) -> LaunchProfile:
    """Constant-acceleration rail profile: a = v^2 / (2 L)."""
    if target_speed_mps < 0 or rail_length_m <= 0:
        raise ConfigError("launch speed must be >= 0 and rail length > 0")
    if target_speed_mps > LAUNCH_SPEED_CAP_MPS:
        raise ConfigError(
            f"launch speed {target_speed_mps} m/s exceeds the "
            f"{LAUNCH_SPEED_CAP_MPS} m/s safety cap")
    accel = target_speed_mps ** 2 / (2.0 * rail_length_m)
    return LaunchProfile(target_speed_mps=target_speed_mps,
                         rail_length_m=rail_length_m,
                         acceleration_mps2=accel)


def worker_count() -> int:
    """Worker cap from the PERCHSIM_THREADS environment variable."""
    raw = os.environ.get("PERCHSIM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PERCHSIM_THREADS must be an integer, got {raw!r}") \
            from exc
    return max(1, n)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)  # shortest round-trip decimal
    return str(value)


def _write_csv(path: Path, header: Sequence[str],
               rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_summary(path: Path, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def _mission_config(cfg: RunConfig) -> MissionConfig:
    ov = cfg.overrides
    branch = BranchSpec(
        center=(float(ov.get("branch.x_m", 14.0)), 0.0,
                float(ov.get("branch.z_m", 2.0))),
        diameter_m=float(ov.get("branch.diameter_m", 0.06)),
        axis_yaw_deg=float(ov.get("branch.axis_yaw_deg", 0.0)),
    )
    base = MissionConfig(branch=branch, seed=cfg.seed)
    mapping = {
        "mission.launch_speed_mps": "launch_speed_mps",
        "mission.pitch_setpoint_deg": "pitch_setpoint_deg",
        "mission.altitude_setpoint_m": "altitude_setpoint_m",
        "mission.launch_lateral_offset_m": "launch_lateral_offset_m",
        "mission.launch_altitude_offset_m": "launch_altitude_offset_m",
        "mission.disturbance_sigma_force_n": "disturbance_sigma_force_n",
        "mission.disturbance_sigma_moment_nm": "disturbance_sigma_moment_nm",
        "mission.soft_branch": "soft_branch",
    }
    kwargs = {attr: ov[key] for key, attr in mapping.items() if key in ov}
    try:
        return replace(base, **kwargs) if kwargs else base
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _trajectory_rows(result: MissionResult) -> List[Tuple]:
    return [(r.t_s, r.x_m, r.y_m, r.z_m, r.vx_mps, r.theta_deg, r.psi_deg,
             r.flap_hz, r.delta_e_deg, r.delta_r_deg, r.beta_deg)
            for r in result.trajectory]


_TRAJ_HEADER = ("t_s", "x_m", "y_m", "z_m", "vx_mps", "theta_deg", "psi_deg",
                "flap_hz", "delta_e_deg", "delta_r_deg", "beta_deg")


def _scenario_claw_sweep(cfg: RunConfig, out: Path) -> bool:
    geom, spring = ClawGeometry(), SpringSpec()
    # start above the spike-contact geometric minimum (3.6 cm)
    diameters = np.arange(0.04, 0.1101, 0.005)
    rows = clawmod.diameter_sweep(geom, spring, diameters)
    _write_csv(out / "claw_sweep.csv",
               ("diameter_m", "contact_force_n", "holding_torque_nm"), rows)
    branch6 = BranchSpec()
    contact = clawmod.contact_force(geom, spring, branch6)
    release = clawmod.release_force(geom, spring)
    hold = clawmod.holding_torque(geom, spring, branch6)
    ok = (abs(contact - 56.8) / 56.8 <= 0.05
          and abs(release - 11.4) / 11.4 <= 0.15
          and hold >= 2.0)
    _write_summary(out / "summary.txt", [
        "scenario = ClawSweep",
        f"contact_force_6cm_n = {contact:.3f}",
        f"release_force_n = {release:.3f}",
        f"holding_torque_nm = {hold:.4f}",
        f"criteria_met = {ok}",
    ])
    return ok


def _scenario_impact_suite(cfg: RunConfig, out: Path) -> bool:
    speeds = np.arange(2.0, 4.01, 0.25)
    misalignments = (-0.03, 0.0, 0.03)
    rows = legmod.impact_sweep(legmod.LegParams(), speeds, misalignments)
    _write_csv(out / "impact_suite.csv",
               ("speed_mps", "misalignment_m", "peak_force_n",
                "time_to_bounce_ms"), rows)
    peak = max(r[2] for r in rows)
    ok = peak < 150.0
    _write_summary(out / "summary.txt", [
        "scenario = ImpactSuite",
        f"max_peak_force_n = {peak:.2f}",
        f"criteria_met = {ok}",
    ])
    return ok


def _scenario_flight_only(cfg: RunConfig, out: Path) -> bool:
    base = _mission_config(cfg)
    light = replace(base.robot, mass_kg=base.robot.mass_no_appendage_kg)
    mission = replace(base, robot=light, soft_branch=True,
                      launch_altitude_offset_m=-0.26)
    result = run_mission(mission)
    _write_csv(out / "trajectory.csv", _TRAJ_HEADER,
               _trajectory_rows(result))
    err = result.diagnostics.get("altitude_error_m", math.inf)
    ok = err <= 0.10
    _write_summary(out / "summary.txt", [
        "scenario = FlightOnly",
        f"altitude_error_m = {err:.4f}",
        f"criteria_met = {ok}",
    ])
    return ok


def _scenario_soft_branch(cfg: RunConfig, out: Path) -> bool:
    mission = replace(_mission_config(cfg), soft_branch=True)
    result = run_mission(mission)
    _write_csv(out / "trajectory.csv", _TRAJ_HEADER,
               _trajectory_rows(result))
    locked = bool(result.impact and result.impact.locked)
    peak = result.impact.peak_force_n if result.impact else float("nan")
    ok = result.impact is not None and not locked
    _write_summary(out / "summary.txt", [
        "scenario = SoftBranch",
        f"locked = {locked}",
        f"peak_force_n = {peak:.2f}",
        f"criteria_met = {ok}",
    ])
    return ok


def _scenario_full_perch(cfg: RunConfig, out: Path) -> bool:
    mission = _mission_config(cfg)
    seeds = tuple(range(cfg.seed, cfg.seed + 9))
    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda s: run_ensemble(mission, seeds=[s])[0], seeds))
    else:
        results = run_ensemble(mission, seeds=seeds)
    summary_rows = []
    for seed, result in zip(seeds, results):
        _write_csv(out / f"run_{seed}.csv", _TRAJ_HEADER,
                   _trajectory_rows(result))
        c = result.crossing
        peak = result.impact.peak_force_n if result.impact else float("nan")
        summary_rows.append((
            seed, result.outcome.value,
            float("nan") if c is None else c.vx_mps,
            float("nan") if c is None else c.yaw_deg,
            float("nan") if c is None else c.pitch_deg,
            float("nan") if c is None else c.y_m,
            float("nan") if c is None else c.altitude_m,
            peak,
        ))
    _write_csv(out / "ensemble.csv",
               ("seed", "outcome", "vx_mps", "psi_deg", "theta_deg",
                "y_m", "z_m", "peak_force_n"), summary_rows)
    perched = sum(r.outcome is PerchOutcome.PERCHED for r in results)
    ok = perched >= 6
    _write_summary(out / "summary.txt", [
        "scenario = FullPerch",
        f"perched = {perched}/9",
        f"criteria_met = {ok}",
    ])
    return ok


def _scenario_envelope(cfg: RunConfig, out: Path) -> bool:
    hold = clawmod.holding_torque(ClawGeometry(), SpringSpec(), BranchSpec())
    thetas = np.arange(40.0, 90.01, 2.5)
    speeds = np.arange(0.0, 8.01, 0.25)
    psis = np.arange(-25.0, 25.01, 1.0)
    speed_grid, yaw_grid = sweep_envelope(thetas, speeds, psis, hold)
    _write_csv(out / "envelope_speed.csv",
               ("theta_leg_deg", "speed_mps", "outcome"),
               [(float(t), float(v), speed_grid[i, j].value)
                for i, t in enumerate(thetas) for j, v in enumerate(speeds)])
    _write_csv(out / "envelope_yaw.csv",
               ("theta_leg_deg", "psi_branch_deg", "outcome"),
               [(float(t), float(p), yaw_grid[i, j].value)
                for i, t in enumerate(thetas) for j, p in enumerate(psis)])
    perched_any = any(o is PerchOutcome.PERCHED for o in speed_grid.ravel())
    _write_summary(out / "summary.txt", [
        "scenario = Envelope",
        f"criteria_met = {perched_any}",
    ])
    return perched_any


def _scenario_optimize(cfg: RunConfig, out: Path) -> bool:
    pso_cfg = PsoConfig(bounds=legmod.DESIGN_BOUNDS, particles=20,
                        iterations=25, seed=cfg.seed)
    result = pso_minimize(legmod.leg_cost_batch, pso_cfg, vectorized=True)
    _write_csv(out / "pso_log.csv", ("iteration", "best_cost"),
               list(enumerate(result.history)))
    monotone = all(b <= a for a, b in zip(result.history,
                                          result.history[1:]))
    _write_summary(out / "summary.txt", [
        "scenario = Optimize",
        f"best_cost = {result.best_cost!r}",
        "best_x = " + " ".join(repr(float(v)) for v in result.best_x),
        f"criteria_met = {monotone}",
    ])
    return monotone


def _scenario_launcher_profile(cfg: RunConfig, out: Path) -> bool:
    ov = cfg.overrides
    profile = launch_profile(
        float(ov.get("launcher.target_speed_mps", 4.0)),
        float(ov.get("launcher.rail_length_m", 1.6)),
    )
    _write_csv(out / "launcher.csv",
               ("target_speed_mps", "rail_length_m", "acceleration_mps2",
                "lateral_offset_m"),
               [(profile.target_speed_mps, profile.rail_length_m,
                 profile.acceleration_mps2, profile.lateral_offset_m)])
    _write_summary(out / "summary.txt", [
        "scenario = LauncherProfile",
        f"acceleration_mps2 = {profile.acceleration_mps2!r}",
        "criteria_met = True",
    ])
    return True


_SCENARIOS = {
    Scenario.CLAW_SWEEP: _scenario_claw_sweep,
    Scenario.IMPACT_SUITE: _scenario_impact_suite,
    Scenario.FLIGHT_ONLY: _scenario_flight_only,
    Scenario.SOFT_BRANCH: _scenario_soft_branch,
    Scenario.FULL_PERCH: _scenario_full_perch,
    Scenario.ENVELOPE: _scenario_envelope,
    Scenario.OPTIMIZE: _scenario_optimize,
    Scenario.LAUNCHER_PROFILE: _scenario_launcher_profile,
}


def run_scenario(cfg: RunConfig) -> int:
    """Execute one scenario; returns the CLI exit code."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ok = _SCENARIOS[cfg.scenario](cfg, out)
    return EXIT_SUCCESS if ok else EXIT_CRITERIA_FAILED
