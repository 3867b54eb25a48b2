"""Touchdown classification and perching success envelopes.

After the claw locks, the robot pivots about the branch like an inverted
pendulum: the center of mass starts behind the vertical through the branch
and the impact momentum rotates it forward while Coulomb friction from the
claw grip dissipates energy.  Stopping too far back leaves a gravity torque
the grip cannot hold (backward fall); sweeping past the rotation budget
tears the grip loose (forward fall); anything between is a perch.

The classifier walks the energy balance in closed form; tests compare it
against a brute-force integration of the pivot ODE.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "TouchdownState",
    "TouchdownGeom",
    "PerchOutcome",
    "evaluate_touchdown",
    "sweep_envelope",
    "scaling_envelope",
]

GRAVITY = 9.81


class PerchOutcome(enum.Enum):
    MISSED = "Missed"
    FALL_FORWARD = "FallForward"
    PERCHED = "Perched"
    FALL_BACKWARD = "FallBackward"


@dataclass(frozen=True)
class TouchdownState:
    """Kinematic state at the moment the claw locks."""

    speed_mps: float = 2.5
    theta_leg_deg: float = 90.0      # 90 = leg horizontal
    psi_branch_deg: float = 0.0      # branch yaw deviation
    body_pitch_deg: float = 30.0
    com_offset_m: float = 0.35       # CoM lever arm about the branch
    inertia_kgm2: float = 0.0898     # two point masses: body + leg
    mass_kg: float = 0.700
    locked: bool = True

    def __post_init__(self):
        if self.speed_mps < 0:
            raise ValueError("speed must be non-negative")
        if not 0.0 <= self.theta_leg_deg <= 90.0:
            raise ValueError("theta_leg must be within 0-90 deg")


@dataclass(frozen=True)
class TouchdownGeom:
    """Pivot-model calibration constants.

    ``start_angle_base_deg`` is the CoM angle behind vertical-up when the leg
    is horizontal; more vertical legs trail the body further back.  The
    rotation budget caps how far the grip can wrap before it slips off.
    """

    start_angle_base_deg: float = 58.5
    start_angle_per_leg_deg: float = 0.25  # per degree below 90 of theta_leg
    start_angle_per_pitch_deg: float = 0.5
    rotation_budget_deg: float = 60.0
    yaw_hold_power: float = 2.0            # hold *= cos(psi)^power

    def start_angle_deg(self, st: TouchdownState) -> float:
        return (self.start_angle_base_deg
                + self.start_angle_per_leg_deg * (90.0 - st.theta_leg_deg)
                + self.start_angle_per_pitch_deg * (st.body_pitch_deg - 30.0))

    def effective_hold(self, hold_nm: float, psi_branch_deg: float) -> float:
        c = math.cos(math.radians(min(89.9, abs(psi_branch_deg))))
        return hold_nm * c ** self.yaw_hold_power


def _pivot_work(delta0_rad: float, dtheta_rad: float, mgr: float,
                hold: float) -> float:
    """Energy absorbed rotating forward by ``dtheta`` from the start angle:
    gravity climb toward the top plus Coulomb friction."""
    return (mgr * (math.cos(delta0_rad - dtheta_rad) - math.cos(delta0_rad))
            + hold * dtheta_rad)


def evaluate_touchdown(
    st: TouchdownState,
    hold_nm: float,
    geom: TouchdownGeom = TouchdownGeom(),
) -> PerchOutcome:
    """Classify a touchdown from the locked-claw pivot energy balance."""
    if not st.locked:
        return PerchOutcome.MISSED
    if math.isinf(hold_nm):
        return PerchOutcome.PERCHED
    hold = geom.effective_hold(hold_nm, st.psi_branch_deg)
    mgr = st.mass_kg * GRAVITY * st.com_offset_m
    delta0 = math.radians(geom.start_angle_deg(st))
    budget = math.radians(geom.rotation_budget_deg)

    # impact momentum: tangential share of the linear momentum about the pivot
    tangential = max(0.0, math.cos(delta0))
    omega0 = st.mass_kg * st.speed_mps * st.com_offset_m * tangential \
        / st.inertia_kgm2
    energy = 0.5 * st.inertia_kgm2 * omega0 * omega0

    if energy >= _pivot_work(delta0, budget, mgr, hold):
        return PerchOutcome.FALL_FORWARD
    # the absorbed work is strictly increasing in rotation here, so the stop
    # angle is the unique root of the energy balance
    lo, hi = 0.0, budget
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _pivot_work(delta0, mid, mgr, hold) < energy:
            lo = mid
        else:
            hi = mid
    delta_stop = delta0 - 0.5 * (lo + hi)

    gravity_torque = mgr * math.sin(abs(delta_stop))
    if gravity_torque > hold:
        return (PerchOutcome.FALL_BACKWARD if delta_stop > 0.0
                else PerchOutcome.FALL_FORWARD)
    return PerchOutcome.PERCHED


def sweep_envelope(
    theta_legs: Sequence[float],
    speeds: Sequence[float],
    psi_branches: Sequence[float],
    hold_nm: float,
    geom: TouchdownGeom = TouchdownGeom(),
    yaw_sweep_speed_mps: float = 2.5,
) -> Tuple[np.ndarray, np.ndarray]:
    """Outcome grids: (theta_leg x speed) and (theta_leg x psi_branch).

    The yaw grid is evaluated at a fixed speed.  Returns object arrays of
    PerchOutcome with shapes (len(theta_legs), len(speeds)) and
    (len(theta_legs), len(psi_branches)).
    """
    speed_grid = np.empty((len(theta_legs), len(speeds)), dtype=object)
    for i, th in enumerate(theta_legs):
        for j, v in enumerate(speeds):
            st = TouchdownState(speed_mps=float(v), theta_leg_deg=float(th))
            speed_grid[i, j] = evaluate_touchdown(st, hold_nm, geom)
    yaw_grid = np.empty((len(theta_legs), len(psi_branches)), dtype=object)
    for i, th in enumerate(theta_legs):
        for j, psi in enumerate(psi_branches):
            st = TouchdownState(speed_mps=yaw_sweep_speed_mps,
                                theta_leg_deg=float(th),
                                psi_branch_deg=float(psi))
            yaw_grid[i, j] = evaluate_touchdown(st, hold_nm, geom)
    return speed_grid, yaw_grid


def scaling_envelope(length_m: float, reference_length_m: float = 1.5,
                     reference_speed_mps: float = 4.0) -> float:
    """Maximum perch speed under the constant L*v^2 kinetic-energy scaling."""
    if length_m <= 0:
        raise ValueError("length must be positive")
    return reference_speed_mps * math.sqrt(reference_length_m / length_m)
