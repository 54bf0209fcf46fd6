"""Forward kinematics and root-local observation of the articulated chain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rotations import (
    quat_conj,
    quat_from_axis_angle,
    quat_mul,
    quat_rotate,
    quat_yaw,
    yaw_quat,
)
from .skeleton import JointState, SkeletonModel


@dataclass
class LinkPoses:
    """World pose and twist of every link, in skeleton link order."""

    positions: np.ndarray     # (n_links, 3)
    orientations: np.ndarray  # (n_links, 4) unit quaternions
    lin_vel: np.ndarray       # (n_links, 3)
    ang_vel: np.ndarray       # (n_links, 3)


def forward_kinematics(skeleton: SkeletonModel, state: JointState) -> LinkPoses:
    """World poses and velocities of all links from generalized coordinates."""
    state.validate(skeleton)
    n = skeleton.num_links
    pos = np.zeros((n, 3))
    quat = np.zeros((n, 4))
    lin = np.zeros((n, 3))
    ang = np.zeros((n, 3))
    joint_of_link = {li: j for j, li in enumerate(skeleton.joint_links)}
    for i, link in enumerate(skeleton.links):
        if link.parent == -1:
            pos[i] = state.root_pos
            quat[i] = state.root_quat
            continue
        p = link.parent
        arm = quat_rotate(quat[p], link.offset)
        pos[i] = pos[p] + arm
        lin[i] = lin[p] + np.cross(ang[p], arm)
        if i in joint_of_link:
            j = joint_of_link[i]
            axis_world = quat_rotate(quat[p], np.asarray(link.axis, dtype=float))
            axis_world = axis_world / np.linalg.norm(axis_world)
            quat[i] = quat_mul(quat[p], quat_from_axis_angle(link.axis, state.q[j]))
            ang[i] = ang[p] + axis_world * state.qdot[j]
        else:
            quat[i] = quat[p]
            ang[i] = ang[p]
    return LinkPoses(pos, quat, lin, ang)


@dataclass
class CharacterState:
    """Per-link pose and twist expressed in the root's heading-free local frame."""

    positions: np.ndarray
    orientations: np.ndarray
    lin_vel: np.ndarray
    ang_vel: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(
            [
                self.positions.reshape(-1),
                self.orientations.reshape(-1),
                self.lin_vel.reshape(-1),
                self.ang_vel.reshape(-1),
            ]
        )

    @property
    def dim(self) -> int:
        return self.positions.shape[0] * 13


def character_state_dim(skeleton: SkeletonModel) -> int:
    return skeleton.num_links * 13


def observe(skeleton: SkeletonModel, state: JointState) -> CharacterState:
    """Express all link poses in the root frame with world yaw removed.

    The resulting observation is invariant to world translation of the root and
    to rotation of the whole character about the world vertical.
    """
    poses = forward_kinematics(skeleton, state)
    root = skeleton.root_index
    heading_inv = quat_conj(yaw_quat(quat_yaw(state.root_quat)))
    n = skeleton.num_links
    out = CharacterState(
        positions=np.zeros((n, 3)),
        orientations=np.zeros((n, 4)),
        lin_vel=np.zeros((n, 3)),
        ang_vel=np.zeros((n, 3)),
    )
    root_pos = poses.positions[root]
    for i in range(n):
        out.positions[i] = quat_rotate(heading_inv, poses.positions[i] - root_pos)
        q = quat_mul(heading_inv, poses.orientations[i])
        # fix quaternion double-cover sign for comparability
        if q[0] < 0:
            q = -q
        out.orientations[i] = q
        out.lin_vel[i] = quat_rotate(heading_inv, poses.lin_vel[i])
        out.ang_vel[i] = quat_rotate(heading_inv, poses.ang_vel[i])
    return out


def phase_of(t: float, episode_length: float) -> float:
    """Normalized running time p = t / episode_length in [0, 1]."""
    if episode_length <= 0:
        raise ValueError("episode_length must be positive")
    if not 0.0 <= t <= episode_length:
        raise ValueError(f"t={t} outside episode [0, {episode_length}]")
    return t / episode_length
