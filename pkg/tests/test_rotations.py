import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pointgen.rotations import (
    IDENTITY_QUAT,
    quat_conj,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_to_matrix,
    quat_yaw,
    yaw_quat,
)


def _random_quat(rng):
    return quat_normalize(rng.normal(size=4))


class TestQuaternionAlgebra:
    def test_identity(self, rng):
        v = rng.normal(size=3)
        assert np.allclose(quat_rotate(IDENTITY_QUAT, v), v)
        q = _random_quat(rng)
        assert np.allclose(quat_mul(IDENTITY_QUAT, q), q)
        assert np.allclose(quat_mul(q, IDENTITY_QUAT), q)

    def test_axis_angle_known_rotation(self):
        q = quat_from_axis_angle([0, 0, 1], np.pi / 2)
        assert np.allclose(quat_rotate(q, np.array([1.0, 0, 0])), [0, 1, 0], atol=1e-12)
        q = quat_from_axis_angle([1, 0, 0], np.pi / 2)
        assert np.allclose(quat_rotate(q, np.array([0.0, 1, 0])), [0, 0, 1], atol=1e-12)

    def test_axis_normalized_internally(self):
        a = quat_from_axis_angle([0, 0, 2.0], 0.7)
        b = quat_from_axis_angle([0, 0, 1.0], 0.7)
        assert np.allclose(a, b)

    def test_zero_axis_rejected(self):
        with pytest.raises(ValueError):
            quat_from_axis_angle([0, 0, 0], 1.0)

    def test_conj_inverts_rotation(self, rng):
        q = _random_quat(rng)
        v = rng.normal(size=3)
        assert np.allclose(quat_rotate(quat_conj(q), quat_rotate(q, v)), v,
                           atol=1e-12)

    def test_mul_composes_rotation(self, rng):
        a, b = _random_quat(rng), _random_quat(rng)
        v = rng.normal(size=3)
        assert np.allclose(quat_rotate(quat_mul(a, b), v),
                           quat_rotate(a, quat_rotate(b, v)), atol=1e-12)

    def test_matrix_agrees_with_rotate(self, rng):
        q = _random_quat(rng)
        v = rng.normal(size=3)
        assert np.allclose(quat_to_matrix(q) @ v, quat_rotate(q, v), atol=1e-12)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_rotation_preserves_norm(self, seed):
        r = np.random.default_rng(seed)
        q = _random_quat(r)
        v = r.normal(size=3)
        assert np.linalg.norm(quat_rotate(q, v)) == pytest.approx(
            np.linalg.norm(v), abs=1e-9)


class TestYaw:
    def test_round_trip(self):
        for angle in (-3.0, -0.5, 0.0, 0.5, 3.0):
            assert quat_yaw(yaw_quat(angle)) == pytest.approx(angle, abs=1e-12)

    def test_yaw_of_composed_rotation(self):
        # the heading of yaw-then-pitch equals the yaw component alone
        q = quat_mul(yaw_quat(0.8), quat_from_axis_angle([1, 0, 0], 0.3))
        assert quat_yaw(q) == pytest.approx(0.8, abs=1e-9)

    def test_yaw_rotates_xy_plane(self):
        q = yaw_quat(np.pi / 2)
        assert np.allclose(quat_rotate(q, np.array([1.0, 0, 0])), [0, 1, 0], atol=1e-12)
        assert np.allclose(quat_rotate(q, np.array([0.0, 0, 1])), [0, 0, 1], atol=1e-12)
