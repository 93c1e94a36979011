import numpy as np
import pytest

from handteleop import geometry as geo
from handteleop.calibration import AnchorSet, CalibrationFrame, SharedMap, build_frame
from handteleop.errors import BadConfig, NotCalibrated
from handteleop.retarget import (
    GripperConfig,
    GripperState,
    HandKeypoints,
    JOINT_INDEX,
    NUM_JOINTS,
    TrackedPointStrategy,
    compute_basis_change,
    gripper_from_pinch,
    map_position,
    map_rotation,
    project_mu,
    retarget_step,
    select_tracked_point,
)
from handteleop.simulator import pose_template

from conftest import random_rotation, random_shared_map


def standard_frame(o=(0, 0, 0)) -> CalibrationFrame:
    return CalibrationFrame(
        o=np.asarray(o, dtype=float),
        ex=geo.vec3(1, 0, 0),
        ey=geo.vec3(0, 1, 0),
        ez=geo.vec3(0, 0, 1),
    )


class TestProjectMu:
    def test_standard_basis(self):
        mu = project_mu(geo.vec3(0.1, 0.2, 0.3), standard_frame())
        assert (mu.mu_x, mu.mu_y, mu.mu_z) == (0.1, 0.2, 0.3)

    def test_non_unit_axis(self):
        f = build_frame(AnchorSet(geo.vec3(0, 0, 0), geo.vec3(0.4, 0, 0), geo.vec3(0, 0.4, 0)))
        mu = project_mu(geo.vec3(0.4, 0, 0), f)
        assert abs(mu.mu_x - 1.0) < 1e-15  # 0.16 / 0.16

    def test_zero_displacement(self):
        f = standard_frame(o=(0.5, -0.2, 0.1))
        mu = project_mu(geo.vec3(0.5, -0.2, 0.1), f)
        assert (mu.mu_x, mu.mu_y, mu.mu_z) == (0.0, 0.0, 0.0)

    def test_joint_scaling_invariance(self, rng):
        # scaling e^x and the displacement along it by s leaves mu_x unchanged
        for _ in range(100):
            f = standard_frame()
            p = rng.uniform(-1, 1, 3)
            s = rng.uniform(0.1, 5.0)
            scaled = CalibrationFrame(o=f.o, ex=s * f.ex, ey=f.ey, ez=f.ez)
            p_scaled = np.array([s * p[0], p[1], p[2]])
            assert abs(project_mu(p, f).mu_x - project_mu(p_scaled, scaled).mu_x) < 1e-9


class TestMapPosition:
    def test_identity_map(self):
        m = SharedMap(standard_frame(), standard_frame(), eta=1.0)
        p = geo.vec3(0.1, 0.2, 0.3)
        assert np.allclose(map_position(p, m), p, atol=1e-15)

    def test_eta_scales_only_z(self):
        m = SharedMap(standard_frame(), standard_frame(), eta=2.0)
        assert np.allclose(map_position(geo.vec3(0, 0, 0.3), m), geo.vec3(0, 0, 0.6))

    def test_rotated_robot_frame(self):
        robot = CalibrationFrame(
            o=geo.vec3(1, 1, 0),
            ex=geo.vec3(0, 1, 0),
            ey=geo.vec3(-1, 0, 0),
            ez=geo.vec3(0, 0, 1),
        )
        m = SharedMap(standard_frame(), robot, eta=1.0)
        # mu = (0.5, 0, 0.2); p_r = (1,1,0) + 0.5*(0,1,0) + 0.2*(0,0,1)
        assert np.allclose(map_position(geo.vec3(0.5, 0, 0.2), m), geo.vec3(1, 1.5, 0.2))

    def test_affinity(self, rng):
        for _ in range(50):
            m = random_shared_map(rng)
            a = rng.uniform(-1, 1, 3)
            b = rng.uniform(-1, 1, 3)
            alpha = rng.uniform(-1, 2)
            lhs = map_position(alpha * a + (1 - alpha) * b, m)
            rhs = alpha * map_position(a, m) + (1 - alpha) * map_position(b, m)
            assert np.allclose(lhs, rhs, atol=1e-9)

    def test_eta_locality(self, rng):
        # changing eta leaves the e_r^x / e_r^y projections of p_r - o_r alone
        for _ in range(50):
            m1 = random_shared_map(rng, eta=1.0)
            m2 = SharedMap(m1.human, m1.robot, eta=3.7)
            p = rng.uniform(-1, 1, 3)
            d1 = map_position(p, m1) - m1.robot.o
            d2 = map_position(p, m2) - m1.robot.o
            for e in (m1.robot.ex, m1.robot.ey):
                assert abs(geo.dot(d1, e) - geo.dot(d2, e)) < 1e-12 * max(1, geo.dot(e, e))


class TestBasisChangeAndRotation:
    def test_all_identity(self):
        m = SharedMap(standard_frame(), standard_frame(), eta=1.0)
        p = compute_basis_change(m, np.eye(3), np.eye(3))
        assert np.allclose(p, np.eye(3), atol=1e-12)
        assert m.p_basis is not None

    def test_rotated_initial_robot(self):
        m = SharedMap(standard_frame(), standard_frame(), eta=1.0)
        rz = geo.rot_z(np.pi / 2)
        p = compute_basis_change(m, np.eye(3), rz)
        assert np.allclose(p, rz, atol=1e-12)

    def test_t0_returns_m_r0_exactly(self, rng):
        m_h0 = random_rotation(rng)
        m_r0 = random_rotation(rng)
        p = random_rotation(rng)
        assert np.array_equal(map_rotation(m_h0, m_h0, m_r0, p), m_r0)

    def test_collapsed_formula(self, rng):
        m_r0 = random_rotation(rng)
        m_ht = random_rotation(rng)
        got = map_rotation(m_ht, np.eye(3), m_r0, np.eye(3))
        assert np.allclose(got, m_r0 @ m_ht, atol=1e-12)

    def test_world_frame_z_rotation(self):
        # expanded by hand: Rz(90) Rz(-90) Rz(theta) Rz(90) = Rz(theta + 90)
        rz90 = geo.rot_z(np.pi / 2)
        theta = 0.7
        got = map_rotation(geo.rot_z(theta), np.eye(3), rz90, rz90)
        assert np.allclose(got, geo.rot_z(theta + np.pi / 2), atol=1e-12)

    def test_conjugation_preserves_angle(self, rng):
        for _ in range(200):
            m_h0 = random_rotation(rng)
            m_r0 = random_rotation(rng)
            p = random_rotation(rng)
            r_h = random_rotation(rng)
            m_rt = map_rotation(m_h0 @ r_h, m_h0, m_r0, p)
            r_r = m_r0.T @ m_rt
            assert abs(geo.rotation_angle(r_r) - geo.rotation_angle(r_h)) < 1e-9

    def test_composition_consistency(self, rng):
        for _ in range(50):
            m_h0 = random_rotation(rng)
            m_r0 = random_rotation(rng)
            p = random_rotation(rng)
            r1 = random_rotation(rng)
            r2 = random_rotation(rng)
            at_once = map_rotation(m_h0 @ (r1 @ r2), m_h0, m_r0, p)
            step1 = p.T @ r1 @ p
            step2 = p.T @ r2 @ p
            stepwise = m_r0 @ step1 @ step2
            assert np.allclose(at_once, stepwise, atol=1e-9)

    def test_output_is_valid_rotation(self, rng):
        for _ in range(100):
            got = map_rotation(random_rotation(rng), random_rotation(rng),
                               random_rotation(rng), random_rotation(rng))
            assert geo.is_rotation(got, tol=1e-9)


def make_keypoints(**overrides) -> HandKeypoints:
    pts = np.arange(NUM_JOINTS * 3, dtype=float).reshape(NUM_JOINTS, 3) / 100.0
    for name, value in overrides.items():
        pts[JOINT_INDEX[name]] = value
    return HandKeypoints(pts)


class TestTrackedPoint:
    def test_index_mcp(self):
        kp = make_keypoints(index_mcp=(0.3, 0.2, 0.1))
        got = select_tracked_point(kp, TrackedPointStrategy.INDEX_MCP)
        assert np.array_equal(got, (0.3, 0.2, 0.1))

    def test_midpoint(self):
        kp = make_keypoints(thumb_tip=(0, 0, 0), index_tip=(0.04, 0, 0))
        got = select_tracked_point(kp, TrackedPointStrategy.THUMB_INDEX_MIDPOINT)
        assert np.array_equal(got, (0.02, 0, 0))

    def test_wrist(self):
        kp = make_keypoints(wrist=(1, 2, 3))
        got = select_tracked_point(kp, TrackedPointStrategy.WRIST)
        assert np.array_equal(got, (1, 2, 3))


class TestGripper:
    def _kp(self, d):
        return make_keypoints(thumb_tip=(0, 0, 0), index_tip=(d, 0, 0))

    def test_open_boundary(self):
        g = gripper_from_pinch(self._kp(0.08), GripperConfig(), GripperState.OPEN)
        assert g.aperture == 1.0 and not g.closed

    def test_closed_boundary(self):
        g = gripper_from_pinch(self._kp(0.02), GripperConfig(), GripperState.OPEN)
        assert g.aperture == 0.0 and g.closed

    def test_midpoint_aperture(self):
        g = gripper_from_pinch(self._kp(0.05), GripperConfig(), GripperState.OPEN)
        assert abs(g.aperture - 0.5) < 1e-12

    def test_hysteresis_band(self):
        cfg = GripperConfig()  # band = 0.01 / 0.06
        band = cfg.hysteresis / (cfg.d_open - cfg.d_close)
        near_mid = self._kp(0.05)
        # inside the band the previous command is kept
        assert not gripper_from_pinch(near_mid, cfg, GripperState.OPEN).closed
        assert gripper_from_pinch(near_mid, cfg, GripperState(0.4, True)).closed
        # well past the band it flips
        below = self._kp(cfg.d_close + (0.5 - 1.5 * band) * (cfg.d_open - cfg.d_close))
        assert gripper_from_pinch(below, cfg, GripperState.OPEN).closed

    def test_bad_config(self):
        with pytest.raises(BadConfig):
            GripperConfig(d_close=0.08, d_open=0.02)


class TestRetargetStep:
    def test_requires_calibration(self):
        from handteleop.retarget import HandSample

        sample = HandSample(t_ns=0, keypoints=make_keypoints(), transform=np.eye(4))
        with pytest.raises(NotCalibrated):
            retarget_step(sample, None, None, None, None,
                          TrackedPointStrategy.INDEX_MCP, GripperConfig())

    def test_translation_along_ex(self, rng):
        from handteleop.retarget import HandSample

        f = build_frame(AnchorSet(geo.vec3(0, 0, 0), geo.vec3(0.4, 0, 0), geo.vec3(0, 0.4, 0)))
        m = SharedMap(f, f, eta=1.0)
        m_h0 = m_r0 = np.eye(3)
        p = compute_basis_change(m, m_h0, m_r0)

        def sample_at(pos):
            kp = pose_template(np.asarray(pos, dtype=float), np.eye(3), 0.08)
            tf = np.eye(4)
            tf[:3, 3] = pos
            return HandSample(t_ns=0, keypoints=kp, transform=tf)

        base = retarget_step(sample_at((0.1, 0.1, 0.1)), m, m_h0, m_r0, p,
                             TrackedPointStrategy.INDEX_MCP, GripperConfig())
        moved = retarget_step(sample_at((0.15, 0.1, 0.1)), m, m_h0, m_r0, p,
                              TrackedPointStrategy.INDEX_MCP, GripperConfig())
        assert np.allclose(moved.position - base.position, (0.05, 0, 0), atol=1e-12)
        assert np.array_equal(moved.rotation, base.rotation)
