"""Vectorized rollout simulator for training.

Mirrors the math of dynamics.step / kinematics.observe exactly, but carries a
batch dimension so many environment instances integrate in lockstep. Only the
training-time assumptions are supported: root fixed at the origin with
identity orientation (so the heading-free root-local observation equals the
world frame).
"""

from __future__ import annotations

import numpy as np

from .dynamics import effective_inertia
from .skeleton import SimConfig, SkeletonModel


def _bquat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=1,
    )


def _bquat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    w = q[:, :1]
    u = q[:, 1:]
    uv = np.cross(u, v)
    return v + 2.0 * np.cross(u, uv + w * v)


class BatchedArm:
    """Lockstep batch of PD-controlled arms with fixed roots at the origin."""

    def __init__(self, skeleton: SkeletonModel, sim_config: SimConfig,
                 batch: int):
        self.skeleton = skeleton
        self.sim_config = sim_config
        self.batch = batch
        self.n_links = skeleton.num_links
        self.n_joints = skeleton.num_joints
        self.inertia = effective_inertia(skeleton)
        self.limits = skeleton.joint_limits
        self.kp = skeleton.pd_gains[:, 0]
        self.kd = skeleton.pd_gains[:, 1]
        self.tau_max = skeleton.torque_limit
        self.parents = np.array([l.parent for l in skeleton.links])
        self.offsets = np.array([l.offset for l in skeleton.links])
        self.joint_of_link = {li: j for j, li in enumerate(skeleton.joint_links)}
        self.axes = {li: np.asarray(skeleton.links[li].axis, dtype=float)
                     / np.linalg.norm(skeleton.links[li].axis)
                     for li in skeleton.joint_links}
        self.desc = {li: skeleton.descendants(li) for li in skeleton.joint_links}
        self.masses = np.array([l.mass for l in skeleton.links])
        self.reset(np.zeros((batch, self.n_joints)))

    def reset(self, q0: np.ndarray) -> None:
        self.q = np.array(q0, dtype=float).reshape(self.batch, self.n_joints)
        self.qdot = np.zeros_like(self.q)
        self._fk()

    def _fk(self) -> None:
        B, n = self.batch, self.n_links
        pos = np.zeros((B, n, 3))
        quat = np.zeros((B, n, 4))
        lin = np.zeros((B, n, 3))
        ang = np.zeros((B, n, 3))
        quat[:, self.skeleton.root_index, 0] = 1.0
        for i in range(n):
            p = self.parents[i]
            if p == -1:
                continue
            arm = _bquat_rotate(quat[:, p], np.broadcast_to(self.offsets[i], (B, 3)))
            pos[:, i] = pos[:, p] + arm
            lin[:, i] = lin[:, p] + np.cross(ang[:, p], arm)
            if i in self.joint_of_link:
                j = self.joint_of_link[i]
                axis = self.axes[i]
                axis_w = _bquat_rotate(quat[:, p], np.broadcast_to(axis, (B, 3)))
                half = 0.5 * self.q[:, j]
                local = np.zeros((B, 4))
                local[:, 0] = np.cos(half)
                local[:, 1:] = np.sin(half)[:, None] * axis
                quat[:, i] = _bquat_mul(quat[:, p], local)
                ang[:, i] = ang[:, p] + axis_w * self.qdot[:, j:j + 1]
            else:
                quat[:, i] = quat[:, p]
                ang[:, i] = ang[:, p]
        self.pos, self.quat, self.lin, self.ang = pos, quat, lin, ang

    def _gravity_torque(self) -> np.ndarray:
        g = self.sim_config.gravity
        tau = np.zeros((self.batch, self.n_joints))
        for li, j in self.joint_of_link.items():
            p = self.parents[li]
            axis_w = _bquat_rotate(
                self.quat[:, p], np.broadcast_to(self.axes[li], (self.batch, 3)))
            moment = np.zeros((self.batch, 3))
            for k in self.desc[li]:
                moment += np.cross(self.pos[:, k] - self.pos[:, li],
                                   self.masses[k] * g)
            tau[:, j] = np.sum(axis_w * moment, axis=1)
        return tau

    def step(self, actions: np.ndarray) -> None:
        targets = np.clip(actions, self.limits[:, 0], self.limits[:, 1])
        h = self.sim_config.control_dt / self.sim_config.substeps
        tau_g = self._gravity_torque()
        q, qdot = self.q, self.qdot
        for _ in range(self.sim_config.substeps):
            tau = np.clip(self.kp * (targets - q) - self.kd * qdot,
                          -self.tau_max, self.tau_max)
            tau = tau + tau_g - self.sim_config.joint_damping * qdot
            qdot = qdot + h * tau / self.inertia
            q = q + h * qdot
        self.q, self.qdot = q, qdot
        self._fk()

    def flat_states(self) -> np.ndarray:
        """(B, n_links * 13) observation vectors matching observe().flat."""
        quat = np.where(self.quat[:, :, :1] < 0, -self.quat, self.quat)
        B = self.batch
        return np.concatenate(
            [self.pos.reshape(B, -1), quat.reshape(B, -1),
             self.lin.reshape(B, -1), self.ang.reshape(B, -1)], axis=1)

    def task_rewards(self, targets: np.ndarray) -> np.ndarray:
        """Pointing reward of the elbow-hand ray per batch element."""
        elbow = self.pos[:, self.skeleton.elbow_index]
        hand = self.pos[:, self.skeleton.hand_index]
        v_eh = hand - elbow
        v_ht = targets - hand
        dot = np.sum(v_eh * v_ht, axis=1)
        norms = np.linalg.norm(v_eh, axis=1) * np.linalg.norm(v_ht, axis=1)
        angle = np.arccos(np.clip(dot / norms, -1.0, 1.0))
        theta_hat = 1.0 - angle / np.pi
        return (np.exp(theta_hat) - 1.0) / np.e
