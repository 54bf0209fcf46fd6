import numpy as np
import pytest

from pointgen.batchsim import BatchedArm
from pointgen.dynamics import (
    Action,
    effective_inertia,
    gravity_torque,
    pd_torque,
    step,
)
from pointgen.kinematics import observe
from pointgen.skeleton import (
    JointState,
    LinkSpec,
    SimConfig,
    SkeletonModel,
    make_toy_arm,
    rest_state,
)


def _free_spinner(kp=1e-9, kd=1e-9):
    """Single-joint skeleton with negligible actuation, for ballistic checks."""
    links = [
        LinkSpec("root", -1, np.zeros(3), 1.0),
        LinkSpec("pivot", 0, np.array([0.0, 0.0, 0.5]), 0.1,
                 axis=np.array([1.0, 0.0, 0.0]), limits=(-10.0, 10.0)),
        LinkSpec("bob", 1, np.array([0.0, 0.0, -0.5]), 1.0),
    ]
    return SkeletonModel(
        links=links,
        pd_gains=np.array([[kp, kd]]),
        torque_limit=np.array([100.0]),
        elbow_index=1,
        hand_index=2,
        mirror_map={l.name: l.name for l in links},
    )


class TestEffectiveInertia:
    def test_toy_arm_values(self, toy_arm):
        # distal point masses at rest distances:
        # both shoulder joints sit 0.30 m above the elbow, 0.55 m above the hand
        expected = 0.8 * 0.30**2 + 0.4 * 0.55**2
        inertia = effective_inertia(toy_arm)
        assert inertia == pytest.approx([expected, expected], abs=1e-12)

    def test_minimum_clamp(self):
        links = [
            LinkSpec("root", -1, np.zeros(3), 1.0),
            LinkSpec("j", 0, np.zeros(3), 1e-6,
                     axis=np.array([0.0, 0.0, 1.0]), limits=(-1, 1)),
            LinkSpec("tip", 1, np.zeros(3), 1e-6),
        ]
        sk = SkeletonModel(links=links, pd_gains=np.array([[1.0, 1.0]]),
                           torque_limit=np.array([1.0]), elbow_index=1,
                           hand_index=2,
                           mirror_map={l.name: l.name for l in links})
        assert effective_inertia(sk) == pytest.approx([0.02])


class TestGravityTorque:
    def test_hanging_rest_is_torque_free(self, toy_arm):
        tau = gravity_torque(toy_arm, rest_state(toy_arm),
                             np.array([0, 0, -9.81]))
        assert np.allclose(tau, 0, atol=1e-12)

    def test_horizontal_arm_moment(self, toy_arm):
        # arm pitched forward to horizontal: elbow 0.30 m, hand 0.55 m out
        st_ = JointState([0.0, np.pi / 2], [0.0, 0.0])
        tau = gravity_torque(toy_arm, st_, np.array([0, 0, -9.81]))
        expected = -(0.8 * 0.30 + 0.4 * 0.55) * 9.81
        assert tau[1] == pytest.approx(expected, abs=1e-9)
        assert tau[0] == pytest.approx(0.0, abs=1e-12)

    def test_zero_gravity(self, toy_arm, rng):
        st_ = JointState(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2))
        tau = gravity_torque(toy_arm, st_, np.zeros(3))
        assert np.allclose(tau, 0)

    def test_linear_in_gravity(self, toy_arm, rng):
        st_ = JointState(rng.uniform(-1, 1, 2), [0, 0])
        g = np.array([0.3, -0.4, -9.0])
        assert np.allclose(gravity_torque(toy_arm, st_, 2 * g),
                           2 * gravity_torque(toy_arm, st_, g), atol=1e-12)


class TestPdTorque:
    def test_proportional_term(self, toy_arm):
        tau = pd_torque(toy_arm, np.zeros(2), np.zeros(2), Action([0.1, -0.2]))
        assert tau == pytest.approx([60 * 0.1, 60 * -0.2])

    def test_derivative_term(self, toy_arm):
        tau = pd_torque(toy_arm, np.zeros(2), np.array([1.0, -2.0]),
                        Action([0.0, 0.0]))
        assert tau == pytest.approx([-8.0, 16.0])

    def test_torque_clamped(self, toy_arm):
        tau = pd_torque(toy_arm, np.zeros(2), np.zeros(2), Action([2.0, -0.4]))
        assert np.all(np.abs(tau) <= 40.0 + 1e-12)
        assert tau[0] == pytest.approx(40.0)

    def test_targets_clipped_to_joint_limits(self, toy_arm):
        # commands past the joint range act like commands at the boundary
        at_limit = pd_torque(toy_arm, np.zeros(2), np.zeros(2),
                             Action([2.2, 2.9]))
        beyond = pd_torque(toy_arm, np.zeros(2), np.zeros(2),
                           Action([100.0, 100.0]))
        assert np.allclose(at_limit, beyond)


class TestStep:
    def test_equilibrium_without_gravity(self, toy_arm):
        cfg = SimConfig(gravity=np.zeros(3))
        st_ = rest_state(toy_arm)
        nxt = step(toy_arm, st_, Action([0.0, 0.0]), cfg)
        assert np.allclose(nxt.q, 0, atol=1e-12)
        assert np.allclose(nxt.qdot, 0, atol=1e-12)

    def test_substep_oracle(self, toy_arm):
        # one substep of semi-implicit Euler, recomputed by hand
        cfg = SimConfig(substeps=1)
        st_ = JointState([0.2, 0.9], [0.5, -0.3])
        action = Action([0.4, 1.2])
        inertia = effective_inertia(toy_arm)
        tau_g = gravity_torque(toy_arm, st_, cfg.gravity)
        tau = pd_torque(toy_arm, st_.q, st_.qdot, action)
        tau = tau + tau_g - cfg.joint_damping * st_.qdot
        qdot = st_.qdot + cfg.control_dt * tau / inertia
        q = st_.q + cfg.control_dt * qdot
        nxt = step(toy_arm, st_, action, cfg)
        assert np.allclose(nxt.q, q, atol=1e-15)
        assert np.allclose(nxt.qdot, qdot, atol=1e-15)

    def test_determinism(self, toy_arm, rng):
        st_ = JointState(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2))
        a = Action(rng.uniform(-1, 1, 2))
        n1 = step(toy_arm, st_.copy(), a, SimConfig())
        n2 = step(toy_arm, st_.copy(), a, SimConfig())
        assert np.array_equal(n1.q, n2.q)
        assert np.array_equal(n1.qdot, n2.qdot)

    def test_input_state_untouched(self, toy_arm):
        st_ = JointState([0.1, 0.2], [0.3, 0.4])
        step(toy_arm, st_, Action([0.0, 0.0]), SimConfig())
        assert np.allclose(st_.q, [0.1, 0.2])
        assert np.allclose(st_.qdot, [0.3, 0.4])

    def test_long_horizon_bounded(self, toy_arm):
        # 10 s of aggressive bang-bang commands stays finite and bounded
        rng = np.random.default_rng(0)
        st_ = rest_state(toy_arm)
        cfg = SimConfig()
        for _ in range(300):
            a = Action(rng.choice([-2.2, 2.2], size=2))
            st_ = step(toy_arm, st_, a, cfg)
            assert np.all(np.isfinite(st_.q))
            assert np.all(np.abs(st_.qdot) < 100.0)

    def test_converges_to_command(self, toy_arm):
        # PD tracking settles near the commanded pose within a second
        st_ = rest_state(toy_arm)
        cfg = SimConfig()
        target = np.array([0.5, 1.0])
        for _ in range(60):
            st_ = step(toy_arm, st_, Action(target), cfg)
        # allow steady-state gravity sag tau_g / kp
        assert np.allclose(st_.q, target, atol=0.12)
        assert np.all(np.abs(st_.qdot) < 0.5)

    def test_ballistic_motion(self):
        # no gains, no gravity, no damping: constant joint velocity
        sk = _free_spinner()
        cfg = SimConfig(gravity=np.zeros(3), joint_damping=0.0)
        st_ = JointState([0.0], [1.0])
        for _ in range(30):
            st_ = step(sk, st_, Action([0.0]), cfg)
        assert st_.qdot[0] == pytest.approx(1.0, abs=1e-7)
        assert st_.q[0] == pytest.approx(1.0, abs=1e-7)

    def test_pendulum_period(self):
        # small oscillations of the unactuated pendulum about the hanging
        # pose: T = 2*pi*sqrt(I / (m g L)) with I = m L^2
        sk = _free_spinner()
        cfg = SimConfig(joint_damping=0.0, substeps=8)
        st_ = JointState([0.05], [0.0])
        signs = []
        for t in range(600):
            st_ = step(sk, st_, Action([0.0]), cfg)
            signs.append(np.sign(st_.q[0]))
        crossings = [t for t in range(1, len(signs))
                     if signs[t] != signs[t - 1]]
        half_periods = np.diff(crossings) * cfg.control_dt
        expected = 2 * np.pi * np.sqrt(0.5 / 9.81)
        assert np.mean(half_periods) * 2 == pytest.approx(expected, rel=0.05)

    def test_action_validation(self, toy_arm):
        st_ = rest_state(toy_arm)
        with pytest.raises(ValueError):
            step(toy_arm, st_, Action([0.0]), SimConfig())
        with pytest.raises(ValueError):
            step(toy_arm, st_, Action([np.inf, 0.0]), SimConfig())


class TestBatchedArmEquivalence:
    def test_matches_reference_path_bitwise(self, toy_arm):
        rng = np.random.default_rng(5)
        B, T = 4, 40
        cfg = SimConfig()
        arm = BatchedArm(toy_arm, cfg, B)
        q0 = rng.uniform(-0.3, 0.3, size=(B, 2))
        arm.reset(q0)
        states = [JointState(q0[b].copy(), np.zeros(2)) for b in range(B)]
        inertia = effective_inertia(toy_arm)
        for _ in range(T):
            actions = rng.uniform(-1.5, 1.5, size=(B, 2))
            arm.step(actions)
            flats = arm.flat_states()
            for b in range(B):
                states[b] = step(toy_arm, states[b], Action(actions[b]), cfg,
                                 inertia=inertia)
                assert np.array_equal(arm.q[b], states[b].q)
                assert np.array_equal(arm.qdot[b], states[b].qdot)
                ref_flat = observe(toy_arm, states[b]).flat
                assert np.allclose(flats[b], ref_flat, atol=1e-12)

    def test_task_rewards_match_scalar_path(self, toy_arm, rng):
        from pointgen.geometry import pointing_reward

        cfg = SimConfig()
        arm = BatchedArm(toy_arm, cfg, 3)
        arm.reset(rng.uniform(-0.5, 0.5, size=(3, 2)))
        targets = rng.uniform(-0.5, 0.5, size=(3, 3)) + [0, 0.6, 0]
        rewards = arm.task_rewards(targets)
        for b in range(3):
            elbow = arm.pos[b, toy_arm.elbow_index]
            hand = arm.pos[b, toy_arm.hand_index]
            assert rewards[b] == pytest.approx(
                pointing_reward(elbow, hand, targets[b]), abs=1e-12)
