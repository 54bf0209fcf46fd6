"""PD-controlled rigid-body dynamics with a per-joint lumped-inertia model.

Each actuated joint is integrated as a 1-DoF revolute coordinate with a
constant effective inertia (distal point masses at rest distances). Gravity
enters as the projection of the distal weight moment onto the joint axis,
recomputed from forward kinematics once per control step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import forward_kinematics
from .rotations import quat_rotate
from .skeleton import JointState, SimConfig, SkeletonModel, rest_state


class SimulationDivergence(RuntimeError):
    """State became non-finite during integration."""


@dataclass
class Action:
    """PD target angles, one per actuated joint."""

    pd_targets: np.ndarray

    def __post_init__(self) -> None:
        self.pd_targets = np.asarray(self.pd_targets, dtype=float).reshape(-1)


_MIN_INERTIA = 0.02  # kg·m², keeps co-located links integrable


def effective_inertia(skeleton: SkeletonModel) -> np.ndarray:
    """Constant per-joint inertia from distal masses at the rest pose."""
    poses = forward_kinematics(skeleton, rest_state(skeleton))
    inertia = np.zeros(skeleton.num_joints)
    for j, li in enumerate(skeleton.joint_links):
        joint_pos = poses.positions[li]
        total = 0.0
        for k in skeleton.descendants(li):
            d = np.linalg.norm(poses.positions[k] - joint_pos)
            total += skeleton.links[k].mass * d * d
        inertia[j] = max(total, _MIN_INERTIA)
    return inertia


def gravity_torque(skeleton: SkeletonModel, state: JointState,
                   gravity: np.ndarray) -> np.ndarray:
    """Axis-projected moment of distal link weights about each joint."""
    poses = forward_kinematics(skeleton, state)
    tau = np.zeros(skeleton.num_joints)
    for j, li in enumerate(skeleton.joint_links):
        parent = skeleton.links[li].parent
        axis = np.asarray(skeleton.links[li].axis, dtype=float)
        axis_w = quat_rotate(poses.orientations[parent], axis)
        axis_w = axis_w / np.linalg.norm(axis_w)
        joint_pos = poses.positions[li]
        moment = np.zeros(3)
        for k in skeleton.descendants(li):
            moment += np.cross(poses.positions[k] - joint_pos,
                               skeleton.links[k].mass * gravity)
        tau[j] = float(axis_w @ moment)
    return tau


def pd_torque(skeleton: SkeletonModel, q: np.ndarray, qdot: np.ndarray,
              action: Action) -> np.ndarray:
    """Clamped PD actuation torque; |tau| never exceeds the joint torque limit."""
    limits = skeleton.joint_limits
    targets = np.clip(action.pd_targets, limits[:, 0], limits[:, 1])
    kp = skeleton.pd_gains[:, 0]
    kd = skeleton.pd_gains[:, 1]
    tau = kp * (targets - q) - kd * qdot
    return np.clip(tau, -skeleton.torque_limit, skeleton.torque_limit)


def step(skeleton: SkeletonModel, state: JointState, action: Action,
         config: SimConfig, inertia: np.ndarray | None = None) -> JointState:
    """Advance one control step of semi-implicit Euler substeps."""
    state.validate(skeleton)
    if action.pd_targets.shape != (skeleton.num_joints,):
        raise ValueError("action dimension does not match skeleton joint count")
    if not np.all(np.isfinite(action.pd_targets)):
        raise ValueError("non-finite action")
    if inertia is None:
        inertia = effective_inertia(skeleton)

    q = state.q.copy()
    qdot = state.qdot.copy()
    h = config.control_dt / config.substeps
    # gravity moment held constant over the control step (30 Hz, small motion)
    tau_g = gravity_torque(skeleton, JointState(q, qdot, state.root_pos,
                                                state.root_quat), config.gravity)
    for _ in range(config.substeps):
        tau = pd_torque(skeleton, q, qdot, action)
        tau = tau + tau_g - config.joint_damping * qdot
        qdot = qdot + h * tau / inertia
        q = q + h * qdot

    nxt = JointState(q, qdot, state.root_pos.copy(), state.root_quat.copy())
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qdot))):
        raise SimulationDivergence("non-finite joint state after integration")
    return nxt
