"""Tests for line-scan branch sensing and the leg centering loop."""

import math

import numpy as np
import pytest

from perchsim.claw import BranchSpec
from perchsim.perception import (
    LegLoopState,
    LegPdGains,
    SensorFrame,
    SensorPose,
    SensorSpec,
    detect_branch,
    detection_limit,
    leg_pd_step,
    render_scan,
)

CENTER_PX = 63.5


@pytest.fixture
def spec():
    return SensorSpec()


@pytest.fixture
def branch():
    return BranchSpec()  # 6 cm at (14, 0, 2)


def noiseless():
    return SensorSpec(noise_sigma=0.0)


class TestRenderScan:
    def test_branch_outside_fov_is_bright(self, branch):
        spec = noiseless()
        pose = SensorPose(x_m=13.0, z_m=4.0)  # branch 2 m below boresight
        frame = render_scan(pose, branch, spec, np.random.default_rng(0))
        angles = spec.pixel_angle_rad(np.arange(128))
        assert np.allclose(frame.brightness, np.cos(angles))

    def test_band_width_at_one_meter(self, branch):
        """Width oracle: 2*atan(0.03/1.0) over the per-pixel ifov."""
        spec = noiseless()
        pose = SensorPose(x_m=13.0, z_m=2.0)
        frame = render_scan(pose, branch, spec, np.random.default_rng(0))
        dark = frame.brightness < 0.5
        expected = 2.0 * math.atan(0.03 / 1.0) / spec.ifov_rad
        assert dark.sum() == pytest.approx(expected, abs=1.0)

    def test_width_halves_when_distance_doubles(self, branch):
        spec = noiseless()
        rng = np.random.default_rng(0)
        near = render_scan(SensorPose(13.0, 2.0), branch, spec, rng)
        far = render_scan(SensorPose(12.0, 2.0), branch, spec, rng)
        w_near = (near.brightness < 0.5).sum()
        w_far = (far.brightness < 0.5).sum()
        assert w_far == pytest.approx(w_near / 2.0, abs=1.0)

    def test_deterministic_per_seed(self, spec, branch):
        a = render_scan(SensorPose(13.0, 2.0), branch, spec,
                        np.random.default_rng(5))
        b = render_scan(SensorPose(13.0, 2.0), branch, spec,
                        np.random.default_rng(5))
        assert np.array_equal(a.brightness, b.brightness)

    def test_values_clamped(self, branch):
        spec = SensorSpec(noise_sigma=0.5)
        frame = render_scan(SensorPose(13.0, 2.0), branch, spec,
                            np.random.default_rng(1))
        assert frame.brightness.min() >= 0.0
        assert frame.brightness.max() <= 1.0


class TestDetectBranch:
    def test_uniform_bright_none(self, spec):
        angles = spec.pixel_angle_rad(np.arange(128))
        frame = SensorFrame(brightness=np.cos(angles))
        assert detect_branch(frame, spec) is None

    def test_reliable_at_1p9m(self, spec, branch):
        """1000 seeded noisy frames at 1.9 m: >= 99% within +-1 px."""
        rng = np.random.default_rng(2024)
        pose = SensorPose(x_m=14.0 - 1.9, z_m=2.0)
        hits = 0
        for _ in range(1000):
            frame = render_scan(pose, branch, spec, rng)
            det = detect_branch(frame, spec)
            if det is not None and abs(det - CENTER_PX) <= 1.0:
                hits += 1
        assert hits >= 990

    def test_highest_band_wins(self, spec):
        angles = spec.pixel_angle_rad(np.arange(128))
        scene = np.ones(128)
        scene[20:26] = 0.1   # low band, wider
        scene[90:93] = 0.1   # high band
        frame = SensorFrame(brightness=scene * np.cos(angles))
        assert detect_branch(frame, spec) == pytest.approx(91.0)

    def test_single_pixel_noise_rejected(self, spec):
        angles = spec.pixel_angle_rad(np.arange(128))
        scene = np.ones(128)
        scene[64] = 0.0
        frame = SensorFrame(brightness=scene * np.cos(angles))
        assert detect_branch(frame, spec) is None

    def test_gain_invariance(self, spec, branch):
        frame = render_scan(SensorPose(13.0, 2.0), branch, noiseless(),
                            np.random.default_rng(0))
        dimmed = SensorFrame(brightness=frame.brightness * 0.5)
        assert detect_branch(dimmed, spec) == detect_branch(frame, spec)

    def test_translation_monotone(self, branch):
        """Raising the branch never lowers the detected pixel index."""
        spec = noiseless()
        prev = -1.0
        for dz in np.arange(-0.3, 0.31, 0.05):
            b = BranchSpec(center=(14.0, 0.0, 2.0 + float(dz)))
            frame = render_scan(SensorPose(12.5, 2.0), b, spec,
                                np.random.default_rng(0))
            det = detect_branch(frame, spec)
            assert det is not None
            assert det >= prev
            prev = det


class TestDetectionLimit:
    def test_six_cm_near_published_limit(self, spec):
        limit = detection_limit(spec, 0.06, 1)
        assert abs(limit - 7.7) / 7.7 <= 0.10

    def test_diameter_linearity(self, spec):
        assert detection_limit(spec, 0.12, 1) == pytest.approx(
            2.0 * detection_limit(spec, 0.06, 1), rel=1e-4)

    def test_two_pixel_requirement_halves_range(self, spec):
        assert detection_limit(spec, 0.06, 2) == pytest.approx(
            detection_limit(spec, 0.06, 1) / 2.0, rel=1e-4)

    def test_invalid_inputs(self, spec):
        with pytest.raises(ValueError):
            detection_limit(spec, -0.01, 1)
        with pytest.raises(ValueError):
            detection_limit(spec, 0.06, 0)


def closed_loop_rms(closed, amp, freq, gains, spec, branch, seconds=3.0):
    """Leg-mounted sensor tracking a vertically oscillating body."""
    leg = 0.2
    state = LegLoopState(beta_cmd_deg=45.0)
    beta = 45.0
    dt = 1.0 / spec.read_hz
    offsets = []
    for i in range(int(seconds / dt)):
        t = i * dt
        body_z = 2.0 + amp * math.sin(2.0 * math.pi * freq * t) \
            + leg * math.cos(math.radians(45.0))
        pose = SensorPose(
            x_m=13.0,
            z_m=body_z - leg * math.cos(math.radians(beta)),
            boresight_rad=math.radians(beta - 45.0),
        )
        frame = render_scan(pose, branch, spec, np.random.default_rng(i))
        det = detect_branch(frame, spec)
        if det is None:
            continue
        offset = det - CENTER_PX
        offsets.append(offset)
        if closed:
            beta, state = leg_pd_step(offset, gains, dt, state)
    return float(np.sqrt(np.mean(np.square(offsets))))


class TestLegLoop:
    def test_zero_offset_no_motion(self):
        state = LegLoopState(beta_cmd_deg=40.0)
        beta, state = leg_pd_step(0.0, LegPdGains(), 1.0 / 200.0, state)
        assert beta == 40.0

    def test_output_clamped_to_hip_range(self):
        gains = LegPdGains(rate_limit_dps=1e6)
        state = LegLoopState(beta_cmd_deg=89.0)
        beta, _ = leg_pd_step(500.0, gains, 1.0 / 200.0, state)
        assert beta == 90.0
        state = LegLoopState(beta_cmd_deg=1.0)
        beta, _ = leg_pd_step(-500.0, gains, 1.0 / 200.0, state)
        assert beta == 0.0

    def test_rate_limit(self):
        gains = LegPdGains(rate_limit_dps=60.0)
        state = LegLoopState(beta_cmd_deg=45.0)
        beta, _ = leg_pd_step(100.0, gains, 1.0 / 200.0, state)
        assert beta - 45.0 == pytest.approx(60.0 / 200.0)

    def test_two_hertz_rejection(self, spec, branch):
        """Closed loop cuts the 2 Hz oscillation residual below 25% of
        open loop."""
        gains = LegPdGains()
        open_rms = closed_loop_rms(False, 0.05, 2.0, gains, spec, branch)
        closed = closed_loop_rms(True, 0.05, 2.0, gains, spec, branch)
        assert closed < 0.25 * open_rms

    def test_four_hertz_bounded(self, spec, branch):
        gains = LegPdGains()
        open_rms = closed_loop_rms(False, 0.01, 4.0, gains, spec, branch)
        closed = closed_loop_rms(True, 0.01, 4.0, gains, spec, branch)
        assert closed < max(open_rms, 1.0)

    def test_scripted_approach_ends_in_capture_window(self, spec):
        """Launch-style approach at 2.5 m/s with the branch 5 cm above the
        initial boresight: the loop steers the claw into the capture
        window before contact."""
        leg = 0.2
        branch = BranchSpec(center=(14.0, 0.0, 2.05))
        state = LegLoopState(beta_cmd_deg=45.0)
        beta = 45.0
        dt = 1.0 / spec.read_hz
        x = 12.5
        body_z = 2.0 + leg * math.cos(math.radians(45.0))
        while x < 13.9:
            pose = SensorPose(
                x_m=x,
                z_m=body_z - leg * math.cos(math.radians(beta)),
                boresight_rad=math.radians(beta - 45.0),
            )
            frame = render_scan(pose, branch, spec,
                                np.random.default_rng(int(x * 1000)))
            det = detect_branch(frame, spec)
            if det is not None:
                beta, state = leg_pd_step(det - CENTER_PX, LegPdGains(),
                                          dt, state)
            x += 2.5 * dt
        claw_z = body_z - leg * math.cos(math.radians(beta))
        assert abs(claw_z - 2.05) < 0.05
