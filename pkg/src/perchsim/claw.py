"""Bistable double-plate claw: torque landscape, snap-through, locking and re-opening.

The claw is a pair of carbon-fiber plate halves pivoting about points spaced
``d_e`` apart.  A single tension spring anchored between a point on the claw
and a point on the frame creates two stable states: the spring line of action
sits behind the pivot in the open position (small opening torque) and swings
in front of it past the snap angle, slamming the claw shut onto the branch.

Angles are in degrees, claw-local lengths in mm, branch diameters in m.
All functions are pure; geometry and spring objects are value types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

__all__ = [
    "SpringSpec",
    "ClawGeometry",
    "BranchSpec",
    "BranchSurface",
    "ClawMode",
    "ClawState",
    "GeometryNotBistableError",
    "NoSpikeContactError",
    "StalledClawError",
    "CannotReopenError",
    "spring_force",
    "spring_extension",
    "spring_potential",
    "claw_torque",
    "snap_angle",
    "release_force",
    "closed_angle",
    "contact_force",
    "holding_torque",
    "closing_dynamics",
    "reopen_profile",
    "diameter_sweep",
]


class GeometryNotBistableError(ValueError):
    """Claw torque has no sign change between open and closed angles."""


class NoSpikeContactError(ValueError):
    """Branch too thin to reach the spikes given the pivot spacing."""


class StalledClawError(RuntimeError):
    """Closing integration did not reach the closed angle within 1 s."""


class CannotReopenError(RuntimeError):
    """Tendon force required along the re-opening path exceeds capacity."""


@dataclass(frozen=True)
class SpringSpec:
    """Linear tension spring, zero preload, force clamped at zero extension."""

    free_length_mm: float = 40.0
    rate_n_per_mm: float = 5.0
    max_force_n: float = 111.0
    mass_g: float = 8.0

    def __post_init__(self):
        if self.rate_n_per_mm <= 0:
            raise ValueError("spring rate must be positive")
        if self.max_force_n <= 0:
            raise ValueError("spring max force must be positive")


class BranchSurface(Enum):
    BARE_CARBON = "bare_carbon"
    SPIKES_ONLY = "spikes_only"
    SPIKES_PLUS_PADS = "spikes_plus_pads"


# Effective Coulomb coefficients per claw-branch interface.  The pads value is
# calibrated so the locked claw holds 2.0 N*m on the nominal 6 cm branch.
MU_EFF_DEFAULTS = {
    BranchSurface.BARE_CARBON: 0.35,
    BranchSurface.SPIKES_ONLY: 0.70,
    BranchSurface.SPIKES_PLUS_PADS: 0.803,
}


@dataclass(frozen=True)
class BranchSpec:
    """Cylindrical branch target."""

    diameter_m: float = 0.06
    center: Tuple[float, float, float] = (14.0, 0.0, 2.0)
    axis_yaw_deg: float = 0.0
    surface: BranchSurface = BranchSurface.SPIKES_PLUS_PADS
    mu_eff: Optional[float] = None

    def __post_init__(self):
        if self.diameter_m <= 0:
            raise ValueError("branch diameter must be positive")

    @property
    def mu(self) -> float:
        if self.mu_eff is not None:
            return self.mu_eff
        return MU_EFF_DEFAULTS[self.surface]


@dataclass(frozen=True)
class ClawGeometry:
    """Kinematic and elastic parameters of one claw half.

    The spring anchor on the claw is given in claw coordinates at psi = 0 and
    rotates with the claw about the pivot (origin).  The frame anchor is
    fixed.  Contact lever and closure-slope values are calibrated once so the
    closed claw applies 56.8 N on a 6 cm branch while the open-state torque
    stays below 0.2 N*m (see demos/calibrate_claw.py).
    """

    d_s: float = 18.8106662315467       # straight contact segment, mm (= contact lever at 6 cm)
    d_r: float = 12.0                   # rounded-section radius, mm
    r_c: float = 35.0                   # claw inner radius, mm
    d_e: float = 50.0                   # pivot spacing, mm
    psi_open: float = -4.0              # open rest angle, deg
    psi_closed: float = 55.0            # closed angle on the 6 cm branch, deg
    trigger_lever: float = 17.5         # pivot-to-trigger distance, mm
    spring_anchor_claw: Tuple[float, float] = (1.438252865486829, 29.965503978657175)
    spring_anchor_frame: Tuple[float, float] = (0.0, -32.0)
    claw_inertia: float = 3.2e-5        # kg*m^2 about the pivot
    spike_offset: float = 7.0           # mm, spike stand-off from the pivot line
    grip_offset_mm: float = 32.0        # lateral half-spacing of the spike pair
    tendon_lever_mm: float = 12.0       # tendon moment arm for re-opening
    closure_slope_deg_per_m: float = 328.6651224251492
    contact_lever_slope: float = 0.07126648047343506
    contact_lever_hinge: float = 0.1    # extra lever growth beyond 7 cm, m/m

    def __post_init__(self):
        if self.d_e <= 0:
            raise ValueError("pivot spacing d_e must be positive")
        if self.psi_open >= 0 and self.psi_closed > 0:
            raise ValueError("open rest angle must be negative (spring behind pivot)")

    @property
    def min_spike_diameter_m(self) -> float:
        """Thinnest branch that still reaches both spikes."""
        return (self.d_e - 2.0 * self.spike_offset) / 1000.0

    @property
    def psi_travel_max(self) -> float:
        """Mechanical travel limit: closed angle on the thinnest grippable branch."""
        extra = self.closure_slope_deg_per_m * (0.06 - self.min_spike_diameter_m)
        return max(self.psi_open, self.psi_closed) + max(0.0, extra)


class ClawMode(Enum):
    OPEN = "open"
    CLOSING = "closing"
    LOCKED = "locked"


@dataclass(frozen=True)
class ClawState:
    psi_deg: float
    psi_rate_dps: float
    spring_extension_mm: float
    mode: ClawMode
    t_s: float = 0.0


def spring_force(spec: SpringSpec, extension_mm: float) -> float:
    """Spring tension in N; zero below zero extension, reported value capped."""
    force = spec.rate_n_per_mm * max(0.0, extension_mm)
    return min(force, spec.max_force_n)


def _anchor_world(geom: ClawGeometry, psi_deg: float) -> Tuple[float, float]:
    c = math.cos(math.radians(psi_deg))
    s = math.sin(math.radians(psi_deg))
    ax, ay = geom.spring_anchor_claw
    return (c * ax - s * ay, s * ax + c * ay)


def spring_extension(geom: ClawGeometry, spec: SpringSpec, psi_deg: float) -> float:
    """Spring extension in mm at claw angle psi."""
    ax, ay = _anchor_world(geom, psi_deg)
    bx, by = geom.spring_anchor_frame
    return math.hypot(bx - ax, by - ay) - spec.free_length_mm


def spring_potential(geom: ClawGeometry, spec: SpringSpec, psi_deg: float) -> float:
    """Stored elastic energy in J at claw angle psi."""
    ext_m = max(0.0, spring_extension(geom, spec, psi_deg)) / 1000.0
    rate_n_per_m = spec.rate_n_per_mm * 1000.0
    return 0.5 * rate_n_per_m * ext_m * ext_m


def claw_torque(geom: ClawGeometry, spec: SpringSpec, psi_deg: float) -> float:
    """Spring torque about the pivot in N*m, positive in the closing direction.

    Negative before the snap angle (holds the claw open), positive after it.
    """
    lo = min(geom.psi_open, geom.psi_closed)
    hi = geom.psi_travel_max
    if not (lo - 1e-9 <= psi_deg <= hi + 1e-9):
        raise ValueError(
            f"psi={psi_deg} deg outside travel range [{lo}, {hi}]"
        )
    ax, ay = _anchor_world(geom, psi_deg)
    bx, by = geom.spring_anchor_frame
    sx, sy = bx - ax, by - ay
    length = math.hypot(sx, sy)
    ext = length - spec.free_length_mm
    if ext <= 0.0:
        return 0.0
    force = spec.rate_n_per_mm * ext  # N (unclamped: torque model, not reporting)
    fx, fy = force * sx / length, force * sy / length
    torque_n_mm = ax * fy - ay * fx
    return torque_n_mm / 1000.0


def snap_angle(geom: ClawGeometry, spec: SpringSpec, tol_deg: float = 1e-6) -> float:
    """Unique zero of the claw torque between the open and closed angles.

    Found by a 0.1 deg sign scan followed by bisection.  Returns the open
    angle itself for the degenerate geometry whose spring line passes through
    the pivot at rest.  Raises GeometryNotBistableError when no sign change
    exists.
    """
    lo, hi = sorted((geom.psi_open, geom.psi_closed))
    n = max(8, int(math.ceil((hi - lo) / 0.1)))
    psis = [lo + (hi - lo) * i / n for i in range(n + 1)]
    torques = [claw_torque(geom, spec, p) for p in psis]
    bracket = None
    for i in range(n):
        if torques[i] * torques[i + 1] < 0.0:
            bracket = (psis[i], psis[i + 1])
            break
    if bracket is None:
        if abs(torques[0]) < 1e-9 and max(abs(t) for t in torques) > 1e-9:
            return lo  # degenerate: snap collapsed onto the open stop
        raise GeometryNotBistableError("claw torque does not change sign")
    a, b = bracket
    fa = claw_torque(geom, spec, a)
    while b - a > tol_deg:
        m = 0.5 * (a + b)
        fm = claw_torque(geom, spec, m)
        if fa * fm <= 0.0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


def release_force(geom: ClawGeometry, spec: SpringSpec) -> float:
    """Force at the trigger tip needed to initiate closing from rest, N."""
    if geom.trigger_lever <= 0:
        raise ValueError("trigger lever must be positive")
    torque_open = claw_torque(geom, spec, geom.psi_open)
    return abs(torque_open) / (geom.trigger_lever / 1000.0)


def closed_angle(geom: ClawGeometry, diameter_m: float) -> float:
    """Claw angle when locked on a branch of the given diameter, deg."""
    return geom.psi_closed - geom.closure_slope_deg_per_m * (diameter_m - 0.06)


def _contact_lever_m(geom: ClawGeometry, diameter_m: float) -> float:
    lever = geom.d_s / 1000.0 + geom.contact_lever_slope * (diameter_m - 0.06)
    lever += geom.contact_lever_hinge * max(0.0, diameter_m - 0.07)
    return lever


def contact_force(geom: ClawGeometry, spec: SpringSpec, branch: BranchSpec) -> float:
    """Normal force pressed onto the branch by the locked claw, N."""
    d = branch.diameter_m
    if d < geom.min_spike_diameter_m:
        raise NoSpikeContactError(
            f"branch diameter {d} m below spike-contact minimum "
            f"{geom.min_spike_diameter_m} m"
        )
    psi_c = closed_angle(geom, d)
    return claw_torque(geom, spec, psi_c) / _contact_lever_m(geom, d)


def holding_torque(geom: ClawGeometry, spec: SpringSpec, branch: BranchSpec) -> float:
    """Slip-limited torque the locked claw resists about the branch axis, N*m."""
    normal = contact_force(geom, spec, branch)
    grip_radius = math.hypot(geom.grip_offset_mm / 1000.0, branch.diameter_m / 2.0)
    return branch.mu * normal * grip_radius


def closing_dynamics(
    geom: ClawGeometry,
    spec: SpringSpec,
    damping: float = 30.0,
    dt: float = 1e-5,
    start_psi_deg: Optional[float] = None,
    record_every: int = 5,
) -> Tuple[List[ClawState], float]:
    """Integrate the snap-through closing motion; returns (states, close_time_ms).

    Rigid-body rotation psi'' = tau(psi)/I - c*psi' (RK4, fixed step).  The
    branch trigger carries the claw just past the snap angle, so integration
    starts there at rest.  Close time is the first time psi reaches the
    nominal closed angle.
    """
    if dt > 1e-4:
        raise ValueError("closing dynamics requires dt <= 0.1 ms")
    if start_psi_deg is None:
        start_psi_deg = snap_angle(geom, spec) + 0.5
    inertia = geom.claw_inertia
    psi_closed = math.radians(geom.psi_closed)
    psi = math.radians(start_psi_deg)
    rate = 0.0
    t = 0.0

    def accel(p: float, v: float) -> float:
        return claw_torque(geom, spec, math.degrees(p)) / inertia - damping * v

    states: List[ClawState] = []

    def record(mode: ClawMode):
        states.append(
            ClawState(
                psi_deg=math.degrees(psi),
                psi_rate_dps=math.degrees(rate),
                spring_extension_mm=spring_extension(geom, spec, math.degrees(psi)),
                mode=mode,
                t_s=t,
            )
        )

    record(ClawMode.CLOSING)
    step = 0
    while psi < psi_closed:
        if t >= 1.0:
            raise StalledClawError("claw did not close within 1 s of simulated time")
        k1p, k1v = rate, accel(psi, rate)
        k2p, k2v = rate + 0.5 * dt * k1v, accel(psi + 0.5 * dt * k1p, rate + 0.5 * dt * k1v)
        k3p, k3v = rate + 0.5 * dt * k2v, accel(psi + 0.5 * dt * k2p, rate + 0.5 * dt * k2v)
        k4p, k4v = rate + dt * k3v, accel(psi + dt * k3p, rate + dt * k3v)
        psi += dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        rate += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        t += dt
        step += 1
        if psi >= psi_closed:
            psi = min(psi, psi_closed + 1e-12)
            record(ClawMode.LOCKED)
            break
        if step % record_every == 0:
            record(ClawMode.CLOSING)
    return states, t * 1000.0


def reopen_profile(
    pull_capacity_n: float = 200.0,
    travel_mm: float = 40.0,
    speed_mm_s: float = 2.0,
    geom: Optional[ClawGeometry] = None,
    spec: Optional[SpringSpec] = None,
    drive_efficiency: float = 0.00993,
) -> Tuple[float, float, float]:
    """Tendon re-opening: returns (duration_s, avg_power_w, peak_tendon_force_n).

    The leadscrew carriage travel maps linearly onto the claw angle from
    closed back past the snap point.  Motor-side losses dominate through the
    high-reduction drive, so total electrical work scales with travel and the
    average power follows work / duration.
    """
    if geom is None:
        geom = ClawGeometry()
    if spec is None:
        spec = SpringSpec()
    if travel_mm < 0 or speed_mm_s <= 0:
        raise ValueError("travel must be >= 0 and speed positive")
    if travel_mm == 0.0:
        return (0.0, 0.0, 0.0)
    snap = snap_angle(geom, spec)
    lever_m = geom.tendon_lever_mm / 1000.0
    n = 200
    peak = 0.0
    for i in range(n + 1):
        psi = snap + (geom.psi_closed - snap) * i / n
        peak = max(peak, claw_torque(geom, spec, psi) / lever_m)
    if peak > pull_capacity_n:
        raise CannotReopenError(
            f"peak tendon force {peak:.1f} N exceeds capacity {pull_capacity_n} N"
        )
    duration_s = travel_mm / speed_mm_s
    work_mech = spring_potential(geom, spec, snap) - spring_potential(
        geom, spec, geom.psi_closed
    )
    work_total = max(0.0, work_mech) / drive_efficiency
    avg_power_w = work_total / duration_s
    return (duration_s, avg_power_w, peak)


def diameter_sweep(
    geom: ClawGeometry,
    spec: SpringSpec,
    diameters_m,
    surface: BranchSurface = BranchSurface.SPIKES_PLUS_PADS,
) -> List[Tuple[float, float, float]]:
    """(diameter_m, contact_force_N, holding_torque_Nm) rows for a sweep."""
    rows = []
    for d in diameters_m:
        branch = BranchSpec(diameter_m=d, surface=surface)
        rows.append(
            (d, contact_force(geom, spec, branch), holding_torque(geom, spec, branch))
        )
    return rows
