"""Planar impact model of the actuated leg and its design cost function.

Two rigid bodies: the robot body (translating along the flight direction) and
the leg rod, hinged at the hip through the servo joint.  Joint compliance
combines the servo gear train with the diagonal energy-storage spring; the
branch is a one-sided Kelvin-Voigt contact at the claw.  Vertical
misalignment of the branch loads the servo joint through the contact moment
arm.

The integrator core is vectorized over simulations so impact suites, design
grids and swarm evaluations run as a single batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

__all__ = [
    "LegParams",
    "ImpactRecord",
    "IntegrationError",
    "simulate_impact",
    "simulate_impact_batch",
    "impact_sweep",
    "leg_cost",
    "leg_cost_batch",
    "DEFAULT_COST_WEIGHTS",
    "DESIGN_SPEED_SUITE",
    "DESIGN_BOUNDS",
]

GRAVITY = 9.81

# Kelvin-Voigt branch contact, calibrated against the published impact force
# and bounce-time envelope (peak < 150 N up to 4 m/s, ~50 ms to bounce).
CONTACT_STIFFNESS = 1800.0    # N/m
CONTACT_DAMPING_RATIO = 0.4
CAPTURE_HALF_WIDTH = 0.05     # m, claw capture window around the boresight

DESIGN_SPEED_SUITE = (2.0, 3.0, 4.0)   # m/s, design-range impact speeds


class IntegrationError(RuntimeError):
    """Contact integration blew up (unstable step size)."""


@dataclass(frozen=True)
class LegParams:
    """Leg mechanism parameters.  Servo limit torque 1.47-1.96 N*m (15-20 kg*cm)."""

    link_length_m: float = 0.20
    leg_mass_kg: float = 0.12
    leg_spring_rate_n_m: float = 1200.0
    leg_spring_rest_m: float = 0.10
    servo_limit_torque_nm: float = 1.72
    servo_joint_stiffness_nm_rad: float = 2.0
    hip_angle_min_deg: float = 0.0     # vertical downwards
    hip_angle_max_deg: float = 90.0    # horizontal
    leg_assembly_mass_budget_kg: float = 0.18
    spring_anchor_fraction: float = 0.4   # diagonal-spring moment arm / link length
    joint_damping_ratio: float = 0.7
    servo_damping_nm_s: float = 0.02

    def __post_init__(self):
        if self.leg_mass_kg <= 0 or self.link_length_m <= 0:
            raise ValueError("leg mass and link length must be positive")
        if not 1.47 <= self.servo_limit_torque_nm <= 1.96:
            raise ValueError("servo limit torque outside the 15-20 kg*cm range")

    def clamp_hip_angle(self, beta_deg: float) -> float:
        return min(self.hip_angle_max_deg, max(self.hip_angle_min_deg, beta_deg))


@dataclass(frozen=True)
class ImpactRecord:
    peak_force_n: float
    time_to_bounce_ms: float        # 0 when no contact occurred
    servo_peak_torque_nm: float
    joint_angular_momentum: float   # kg*m^2/s, peak about the hip
    locked: bool


def _joint_stiffness(leg: LegParams) -> float:
    arm = leg.spring_anchor_fraction * leg.link_length_m
    return leg.servo_joint_stiffness_nm_rad + leg.leg_spring_rate_n_m * arm * arm


def simulate_impact_batch(
    link_length: np.ndarray,
    leg_mass: np.ndarray,
    spring_rate: np.ndarray,
    total_mass: np.ndarray,
    speed: np.ndarray,
    misalignment_z: np.ndarray,
    servo_stiffness: float = 2.0,
    servo_damping: float = 0.02,
    spring_anchor_fraction: float = 0.4,
    joint_damping_ratio: float = 0.7,
    dt: float = 1e-4,
    t_max: float = 0.15,
):
    """Vectorized impact core.  All array inputs broadcast to a common shape.

    Returns (peak_force, time_to_bounce_s, servo_peak_torque, peak_joint_L,
    locked) as arrays of the broadcast shape.
    """
    if dt > 2e-4:
        raise ValueError("impact integration requires dt <= 0.2 ms")
    l, m, k_sp, mt, v0, zb = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in
          (link_length, leg_mass, spring_rate, total_mass, speed, misalignment_z))
    )
    shape = l.shape
    mb = mt - m
    if np.any(mb <= 0):
        raise ValueError("leg mass exceeds total mass")
    arm = spring_anchor_fraction * l
    k_rot = servo_stiffness + k_sp * arm * arm
    i_hip = m * l * l / 3.0
    c_rot = 2.0 * joint_damping_ratio * np.sqrt(k_rot * i_hip)
    k_c = CONTACT_STIFFNESS
    c_c = 2.0 * CONTACT_DAMPING_RATIO * np.sqrt(k_c * mt)
    capture = np.abs(zb) <= CAPTURE_HALF_WIDTH

    # state: x, xd (body), phi, phid (leg about hip, 0 = aligned with flight)
    x = np.zeros(shape)
    xd = v0.copy()
    phi = np.zeros(shape)
    phid = np.zeros(shape)

    peak = np.zeros(shape)
    servo_peak = np.zeros(shape)
    l_peak = np.zeros(shape)
    touched = np.zeros(shape, dtype=bool)
    bounced = np.zeros(shape, dtype=bool)
    t_touch = np.zeros(shape)
    t_bounce = np.zeros(shape)

    def contact_force(x_, xd_, phi_, phid_):
        sin_p, cos_p = np.sin(phi_), np.cos(phi_)
        r_y = l * sin_p + zb * cos_p
        delta = x_ + l * cos_p - zb * sin_p - l
        ddot = xd_ - r_y * phid_
        f = np.where(
            capture & (delta > 0.0),
            np.maximum(0.0, k_c * delta + c_c * ddot),
            0.0,
        )
        return f, r_y, sin_p, cos_p

    # hip-referenced leg inertia for a uniform rod: m l^2 / 3 (i_hip above)
    def accel(x_, xd_, phi_, phid_):
        f, r_y, sin_p, cos_p = contact_force(x_, xd_, phi_, phid_)
        m11 = mb + m
        m12 = -m * (l / 2.0) * sin_p
        m22 = i_hip
        q_x = m * (l / 2.0) * cos_p * phid_ * phid_ - f
        q_phi = f * r_y - k_rot * phi_ - c_rot * phid_
        det = m11 * m22 - m12 * m12
        xdd = (m22 * q_x - m12 * q_phi) / det
        phidd = (m11 * q_phi - m12 * q_x) / det
        return xdd, phidd, f

    n_steps = int(round(t_max / dt))
    t = 0.0
    for _ in range(n_steps):
        a1x, a1p, f_now = accel(x, xd, phi, phid)
        k1 = (xd, a1x, phid, a1p)
        x2, xd2 = x + 0.5 * dt * k1[0], xd + 0.5 * dt * k1[1]
        p2, pd2 = phi + 0.5 * dt * k1[2], phid + 0.5 * dt * k1[3]
        a2x, a2p, _ = accel(x2, xd2, p2, pd2)
        k2 = (xd2, a2x, pd2, a2p)
        x3, xd3 = x + 0.5 * dt * k2[0], xd + 0.5 * dt * k2[1]
        p3, pd3 = phi + 0.5 * dt * k2[2], phid + 0.5 * dt * k2[3]
        a3x, a3p, _ = accel(x3, xd3, p3, pd3)
        k3 = (xd3, a3x, pd3, a3p)
        x4, xd4 = x + dt * k3[0], xd + dt * k3[1]
        p4, pd4 = phi + dt * k3[2], phid + dt * k3[3]
        a4x, a4p, _ = accel(x4, xd4, p4, pd4)
        k4 = (xd4, a4x, pd4, a4p)

        x = x + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        xd = xd + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        phi = phi + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        phid = phid + dt / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        t += dt

        f_now, _, _, _ = contact_force(x, xd, phi, phid)
        in_contact = f_now > 0.0
        new_touch = in_contact & ~touched
        t_touch = np.where(new_touch, t, t_touch)
        touched |= in_contact
        new_bounce = touched & ~in_contact & ~bounced
        t_bounce = np.where(new_bounce, t - t_touch, t_bounce)
        bounced |= new_bounce

        peak = np.maximum(peak, f_now)
        servo_tau = np.abs(servo_stiffness * phi + servo_damping * phid)
        servo_peak = np.maximum(servo_peak, servo_tau)
        joint_l = np.abs(i_hip * phid - m * (l / 2.0) * np.sin(phi) * xd)
        l_peak = np.maximum(l_peak, joint_l)

        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > 2.0):
            raise IntegrationError("contact integration diverged; reduce dt")

    time_to_bounce = np.where(touched, np.where(bounced, t_bounce, t_max), 0.0)
    locked = touched & capture
    return peak, time_to_bounce, servo_peak, l_peak, locked


def simulate_impact(
    leg: LegParams,
    total_mass_kg: float = 0.700,
    speed_mps: float = 2.5,
    misalignment_z_m: float = 0.0,
    branch=None,
    dt: float = 1e-4,
) -> ImpactRecord:
    """Single impact run; the claw tip starts touching the branch at ``speed``."""
    if not 0.0 <= speed_mps <= 6.0:
        raise ValueError("impact speed must be within 0-6 m/s")
    peak, t_b, servo, jl, locked = simulate_impact_batch(
        leg.link_length_m,
        leg.leg_mass_kg,
        leg.leg_spring_rate_n_m,
        total_mass_kg,
        speed_mps,
        misalignment_z_m,
        servo_stiffness=leg.servo_joint_stiffness_nm_rad,
        servo_damping=leg.servo_damping_nm_s,
        spring_anchor_fraction=leg.spring_anchor_fraction,
        joint_damping_ratio=leg.joint_damping_ratio,
        dt=dt,
    )
    return ImpactRecord(
        peak_force_n=float(peak),
        time_to_bounce_ms=float(t_b) * 1000.0,
        servo_peak_torque_nm=float(servo),
        joint_angular_momentum=float(jl),
        locked=bool(locked),
    )


def impact_sweep(
    leg: LegParams,
    speeds: Sequence[float],
    misalignments: Sequence[float],
    total_mass_kg: float = 0.700,
    dt: float = 1e-4,
) -> List[Tuple[float, float, float, float]]:
    """(speed_mps, misalignment_m, peak_force_N, time_to_bounce_ms) rows."""
    sp, mz = np.meshgrid(np.asarray(speeds), np.asarray(misalignments), indexing="ij")
    peak, t_b, _, _, _ = simulate_impact_batch(
        leg.link_length_m,
        leg.leg_mass_kg,
        leg.leg_spring_rate_n_m,
        total_mass_kg,
        sp,
        mz,
        servo_stiffness=leg.servo_joint_stiffness_nm_rad,
        servo_damping=leg.servo_damping_nm_s,
        spring_anchor_fraction=leg.spring_anchor_fraction,
        joint_damping_ratio=leg.joint_damping_ratio,
        dt=dt,
    )
    rows = []
    for i in range(sp.shape[0]):
        for j in range(sp.shape[1]):
            rows.append(
                (float(sp[i, j]), float(mz[i, j]), float(peak[i, j]),
                 float(t_b[i, j]) * 1000.0)
            )
    return rows


# Cost weights after per-term normalization at the baseline leg.
DEFAULT_COST_WEIGHTS = (1.0, 1.0, 5.0)

# Design box for the three-parameter leg problem:
# (link_length_m, spring_rate_n_m, leg_mass_kg).
DESIGN_BOUNDS = ((0.12, 0.30), (600.0, 2000.0), (0.06, 0.20))

# Baseline normalization constants: peak servo torque, peak joint angular
# momentum over the 2-4 m/s design suite at 3 cm misalignment, and leg mass
# of the default LegParams (see demos/leg_design_pso.py).
_BASELINE_SERVO_TORQUE = None
_BASELINE_JOINT_L = None
_BASELINE_MASS = 0.12
_COST_MISALIGNMENT = 0.03
_COST_DT = 2e-4


def _baselines() -> Tuple[float, float]:
    global _BASELINE_SERVO_TORQUE, _BASELINE_JOINT_L
    if _BASELINE_SERVO_TORQUE is None:
        leg = LegParams()
        servo, jl = _suite_peaks(
            np.array([leg.link_length_m]),
            np.array([leg.leg_mass_kg]),
            np.array([leg.leg_spring_rate_n_m]),
            DESIGN_SPEED_SUITE,
            (0.700,) * len(DESIGN_SPEED_SUITE),
        )
        _BASELINE_SERVO_TORQUE = float(servo[0])
        _BASELINE_JOINT_L = float(jl[0])
    return _BASELINE_SERVO_TORQUE, _BASELINE_JOINT_L


def _suite_peaks(l, m, k, speeds, masses):
    """Worst-case servo torque and joint momentum over an impact suite."""
    n = l.shape[0]
    servo_max = np.zeros(n)
    l_max = np.zeros(n)
    for speed, mass in zip(speeds, masses):
        _, _, servo, jl, _ = simulate_impact_batch(
            l, m, k, mass, speed, _COST_MISALIGNMENT, dt=_COST_DT
        )
        servo_max = np.maximum(servo_max, servo)
        l_max = np.maximum(l_max, jl)
    return servo_max, l_max


def leg_cost_batch(
    params: np.ndarray,
    impact_suite: Sequence[Tuple[float, float]] = None,
    weights: Tuple[float, float, float] = DEFAULT_COST_WEIGHTS,
) -> np.ndarray:
    """Design cost for rows of (link_length, spring_rate, leg_mass)."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if impact_suite is None:
        impact_suite = [(s, 0.700) for s in DESIGN_SPEED_SUITE]
    for speed, _ in impact_suite:
        if not 2.0 <= speed <= 4.0:
            raise ValueError("design suite speeds must lie in 2-4 m/s")
    l, k, m = params[:, 0], params[:, 1], params[:, 2]
    speeds = [s for s, _ in impact_suite]
    masses = [mm for _, mm in impact_suite]
    servo_max, l_max = _suite_peaks(l, m, k, speeds, masses)
    tau0, l0 = _baselines()
    w1, w2, w3 = weights
    return w1 * servo_max / tau0 + w2 * l_max / l0 + w3 * m / _BASELINE_MASS


def leg_cost(
    leg: LegParams,
    impact_suite: Sequence[Tuple[float, float]] = None,
    weights: Tuple[float, float, float] = DEFAULT_COST_WEIGHTS,
) -> float:
    """Scalar design cost of one leg over an impact suite of (speed, mass)."""
    params = np.array(
        [[leg.link_length_m, leg.leg_spring_rate_n_m, leg.leg_mass_kg]]
    )
    return float(leg_cost_batch(params, impact_suite, weights)[0])
