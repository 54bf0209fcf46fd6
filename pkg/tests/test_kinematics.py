import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointgen.kinematics import (
    character_state_dim,
    forward_kinematics,
    observe,
    phase_of,
)
from pointgen.rotations import quat_from_axis_angle
from pointgen.skeleton import JointState, make_toy_arm, rest_state


class TestForwardKinematics:
    def test_rest_pose_positions(self, toy_arm):
        poses = forward_kinematics(toy_arm, rest_state(toy_arm))
        assert np.allclose(poses.positions[0], [0, 0, 0])
        assert np.allclose(poses.positions[1], [0, 0, 0.25])
        assert np.allclose(poses.positions[2], [0, 0, 0.25])
        assert np.allclose(poses.positions[3], [0, 0, -0.05])
        assert np.allclose(poses.positions[4], [0, 0, -0.30])
        assert np.allclose(poses.lin_vel, 0)
        assert np.allclose(poses.ang_vel, 0)

    def test_pitch_quarter_turn(self, toy_arm):
        # pitch +pi/2 about +x swings the hanging arm forward along +y
        st_ = JointState([0.0, np.pi / 2], [0.0, 0.0])
        poses = forward_kinematics(toy_arm, st_)
        assert np.allclose(poses.positions[3], [0, 0.30, 0.25], atol=1e-12)
        assert np.allclose(poses.positions[4], [0, 0.55, 0.25], atol=1e-12)

    def test_yaw_then_pitch(self, toy_arm):
        # with the arm forward, yaw rotates the hand about the vertical
        phi = 0.7
        st_ = JointState([phi, np.pi / 2], [0.0, 0.0])
        poses = forward_kinematics(toy_arm, st_)
        expected = np.array([-0.55 * np.sin(phi), 0.55 * np.cos(phi), 0.25])
        assert np.allclose(poses.positions[4], expected, atol=1e-12)

    def test_velocity_of_hand(self, toy_arm):
        w = 1.3
        st_ = JointState([0.0, 0.0], [0.0, w])
        poses = forward_kinematics(toy_arm, st_)
        # hand hangs 0.55 m below the shoulder; pitch rate w about world +x
        assert np.allclose(poses.ang_vel[4], [w, 0, 0], atol=1e-12)
        assert np.allclose(poses.lin_vel[4], [0, 0.55 * w, 0], atol=1e-12)
        # yaw spin at rest moves nothing (chain lies on the yaw axis)
        st2 = JointState([0.0, 0.0], [2.0, 0.0])
        poses2 = forward_kinematics(toy_arm, st2)
        assert np.allclose(poses2.lin_vel[4], 0, atol=1e-12)

    @given(q0=st.floats(-2.2, 2.2), q1=st.floats(-0.4, 2.9))
    @settings(max_examples=50, deadline=None)
    def test_link_lengths_rigid(self, q0, q1):
        arm = make_toy_arm()
        poses = forward_kinematics(arm, JointState([q0, q1], [0, 0]))
        d_se = np.linalg.norm(poses.positions[3] - poses.positions[2])
        d_eh = np.linalg.norm(poses.positions[4] - poses.positions[3])
        assert d_se == pytest.approx(0.30, abs=1e-12)
        assert d_eh == pytest.approx(0.25, abs=1e-12)

    def test_unit_quaternions(self, toy_arm, rng):
        st_ = JointState(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2))
        poses = forward_kinematics(toy_arm, st_)
        assert np.allclose(np.linalg.norm(poses.orientations, axis=1), 1.0)

    def test_dimension_mismatch(self, toy_arm):
        with pytest.raises(ValueError):
            forward_kinematics(toy_arm, JointState([0.0], [0.0]))

    def test_nonfinite_state(self, toy_arm):
        with pytest.raises(ValueError):
            forward_kinematics(toy_arm, JointState([np.nan, 0.0], [0, 0]))


class TestObserve:
    def test_flat_dim(self, toy_arm, desk_arm):
        st_ = rest_state(toy_arm)
        assert observe(toy_arm, st_).flat.shape == (5 * 13,)
        assert character_state_dim(toy_arm) == 65
        assert character_state_dim(desk_arm) == 6 * 13

    def test_translation_invariance(self, toy_arm, rng):
        q = rng.uniform(-1, 1, 2)
        qd = rng.uniform(-1, 1, 2)
        base = observe(toy_arm, JointState(q, qd)).flat
        moved = observe(
            toy_arm, JointState(q, qd, root_pos=[3.7, -1.2, 0.5])).flat
        assert np.allclose(base, moved, atol=1e-12)

    def test_yaw_invariance(self, toy_arm, rng):
        q = rng.uniform(-1, 1, 2)
        qd = rng.uniform(-1, 1, 2)
        base = observe(toy_arm, JointState(q, qd)).flat
        for yaw in (0.3, -2.0, 3.0):
            rot = quat_from_axis_angle([0, 0, 1], yaw)
            spun = observe(toy_arm, JointState(q, qd, root_quat=rot)).flat
            assert np.allclose(base, spun, atol=1e-9)

    def test_tilt_not_removed(self, toy_arm):
        # only the heading (yaw) is removed; a root tilt must change the view
        q = np.array([0.3, 0.8])
        base = observe(toy_arm, JointState(q, [0, 0])).flat
        tilt = quat_from_axis_angle([1, 0, 0], 0.5)
        tilted = observe(toy_arm, JointState(q, [0, 0], root_quat=tilt)).flat
        assert not np.allclose(base, tilted, atol=1e-6)

    def test_quaternion_sign_canonical(self, toy_arm, rng):
        st_ = JointState(rng.uniform(-2, 2, 2), [0, 0])
        cs = observe(toy_arm, st_)
        assert np.all(cs.orientations[:, 0] >= 0)


class TestPhase:
    def test_endpoints_and_interior(self):
        assert phase_of(0.0, 2.0) == 0.0
        assert phase_of(2.0, 2.0) == 1.0
        assert phase_of(0.5, 2.0) == 0.25

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            phase_of(-0.1, 2.0)
        with pytest.raises(ValueError):
            phase_of(2.1, 2.0)
        with pytest.raises(ValueError):
            phase_of(0.5, 0.0)

    @given(t=st.floats(0, 1), length=st.floats(0.01, 100))
    @settings(max_examples=50, deadline=None)
    def test_always_in_unit_interval(self, t, length):
        assert 0.0 <= phase_of(t * length, length) <= 1.0
