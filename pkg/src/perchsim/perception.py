"""Line-scan branch sensing and the leg centering loop.

A simulated 1x128 line-scan sensor rides on the leg and images the branch as
a dark band against a bright background.  Detection divides out the cosine
vignetting profile, thresholds at a fraction of the frame mean, and accepts
the highest-located dark run.  The detected pixel offset feeds a PD loop
that steers the leg so the claw boresight tracks the branch during the final
approach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .claw import BranchSpec

__all__ = [
    "SensorSpec",
    "SensorPose",
    "SensorFrame",
    "LegPdGains",
    "LegLoopState",
    "render_scan",
    "detect_branch",
    "detection_limit",
    "leg_pd_step",
]

ARCMIN_RAD = math.pi / (180.0 * 60.0)


@dataclass(frozen=True)
class SensorSpec:
    pixels: int = 128
    ifov_arcmin: float = 28.0
    read_hz_capability: float = 330.0
    read_hz: float = 200.0
    noise_sigma: float = 0.02        # brightness fraction, Gaussian
    threshold_fraction: float = 0.6  # of rectified frame mean
    min_run_px: int = 2
    dark_level: float = 0.15         # branch albedo vs bright background 1.0

    def __post_init__(self):
        if self.pixels != 128:
            raise ValueError("sensor is a 1x128 line-scan device")
        if self.ifov_arcmin <= 0:
            raise ValueError("ifov must be positive")
        if self.read_hz > self.read_hz_capability:
            raise ValueError("effective read rate exceeds sensor capability")

    @property
    def ifov_rad(self) -> float:
        return self.ifov_arcmin * ARCMIN_RAD

    def pixel_angle_rad(self, idx) -> np.ndarray:
        """Off-boresight angle of pixel centers; higher index looks higher."""
        return (np.asarray(idx, dtype=float) - (self.pixels - 1) / 2.0) * self.ifov_rad


@dataclass(frozen=True)
class SensorPose:
    """Sensor origin and boresight direction in the vertical X-Z plane."""

    x_m: float
    z_m: float
    boresight_rad: float = 0.0  # elevation of the optical axis


@dataclass(frozen=True)
class SensorFrame:
    brightness: np.ndarray  # shape (128,), clamped to [0, 1]
    timestamp_s: float = 0.0

    def __post_init__(self):
        if self.brightness.shape != (128,):
            raise ValueError("frame must hold 128 pixels")


def render_scan(
    pose: SensorPose,
    branch: BranchSpec,
    spec: SensorSpec,
    rng: np.random.Generator,
    timestamp_s: float = 0.0,
) -> SensorFrame:
    """Project the branch cylinder onto the pixel line.

    Pixels whose line of sight crosses the branch silhouette are dark; all
    others show the bright background.  Both are attenuated by the cosine
    off-axis falloff, then seeded Gaussian noise is added and the values are
    clamped to [0, 1].
    """
    bx, bz = branch.center[0], branch.center[2]
    dx = bx - pose.x_m
    dz = bz - pose.z_m
    dist = math.hypot(dx, dz)
    angles = spec.pixel_angle_rad(np.arange(spec.pixels))
    scene = np.ones(spec.pixels)
    if dist > branch.diameter_m / 2.0 and dx > 0.0:
        center_angle = math.atan2(dz, dx) - pose.boresight_rad
        half_width = math.atan2(branch.diameter_m / 2.0, dist)
        dark = np.abs(angles - center_angle) <= half_width
        scene[dark] = spec.dark_level
    brightness = scene * np.cos(angles)
    brightness = brightness + rng.normal(0.0, spec.noise_sigma, spec.pixels)
    return SensorFrame(
        brightness=np.clip(brightness, 0.0, 1.0), timestamp_s=timestamp_s
    )


def detect_branch(frame: SensorFrame, spec: SensorSpec) -> Optional[float]:
    """Pixel index of the branch center, or None.

    The signal is rectified by dividing out the cosine falloff, thresholded
    at a fraction of the rectified mean, and contiguous sub-threshold runs of
    at least ``min_run_px`` pixels qualify; the highest-located run wins and
    its center index is returned.
    """
    angles = spec.pixel_angle_rad(np.arange(spec.pixels))
    rectified = frame.brightness / np.cos(angles)
    threshold = spec.threshold_fraction * float(rectified.mean())
    dark = rectified < threshold
    best: Optional[Tuple[int, int]] = None  # (start, length), keep highest
    start = None
    for i, d in enumerate(np.append(dark, False)):
        if d and start is None:
            start = i
        elif not d and start is not None:
            length = i - start
            if length >= spec.min_run_px:
                best = (start, length)  # later runs sit higher in the scene
            start = None
    if best is None:
        return None
    run_start, run_len = best
    return run_start + (run_len - 1) / 2.0


def detection_limit(spec: SensorSpec, diameter_m: float,
                    min_pixels: int = 1) -> float:
    """Distance at which the branch subtends ``min_pixels`` of angular width."""
    if diameter_m <= 0:
        raise ValueError("diameter must be positive")
    if min_pixels < 1:
        raise ValueError("min_pixels must be at least 1")
    subtended = min_pixels * spec.ifov_rad
    return diameter_m / (2.0 * math.tan(subtended / 2.0))


@dataclass(frozen=True)
class LegPdGains:
    kp_deg_per_px: float = 0.35
    kd_deg_s_per_px: float = 0.001
    rate_limit_dps: float = 60.0


@dataclass(frozen=True)
class LegLoopState:
    beta_cmd_deg: float = 45.0
    prev_offset_px: float = 0.0
    initialized: bool = False


def leg_pd_step(
    offset_px: float,
    gains: LegPdGains,
    dt: float,
    state: LegLoopState,
) -> Tuple[float, LegLoopState]:
    """One PD update of the leg position command from the pixel offset.

    ``offset_px`` is the detected branch center minus the boresight pixel;
    positive means the branch sits above the claw line, so the leg rises.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.initialized:
        rate = (offset_px - state.prev_offset_px) / dt
    else:
        rate = 0.0
    step = gains.kp_deg_per_px * offset_px + gains.kd_deg_s_per_px * rate
    max_step = gains.rate_limit_dps * dt
    step = min(max_step, max(-max_step, step))
    beta = min(90.0, max(0.0, state.beta_cmd_deg + step))
    return beta, LegLoopState(beta_cmd_deg=beta, prev_offset_px=offset_px,
                              initialized=True)
