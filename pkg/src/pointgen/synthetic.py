"""Procedurally generated raise-hold-retract pointing clips.

Used as demonstration data for training fixtures, as stimuli for the study
service's procedural model, and as ground truth in tests. Assumes the arm
factories' joint convention: joint 0 is shoulder yaw about z, joint 1 is
shoulder pitch about x, remaining joints rest at zero; the arm hangs along -z
at q = 0.
"""

from __future__ import annotations

import numpy as np

from .clips import ClipLibrary, MotionClip
from .geometry import TargetPoint
from .kinematics import forward_kinematics
from .skeleton import SkeletonModel, rest_state


def shoulder_position(skeleton: SkeletonModel) -> np.ndarray:
    poses = forward_kinematics(skeleton, rest_state(skeleton))
    # first actuated link is the shoulder cluster
    return poses.positions[skeleton.joint_links[0]]


def aim_angles(skeleton: SkeletonModel, target) -> tuple[float, float]:
    """Yaw/pitch that point the straight arm from the shoulder at the target."""
    target = np.asarray(target, dtype=float).reshape(3)
    d = target - shoulder_position(skeleton)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ValueError("target coincides with the shoulder")
    d = d / norm
    pitch = float(np.arccos(np.clip(-d[2], -1.0, 1.0)))
    yaw = float(np.arctan2(-d[0], d[1]))
    return yaw, pitch


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def make_pointing_clip(
    skeleton: SkeletonModel,
    target,
    fps: float = 30.0,
    duration: float = 2.0,
    hold: tuple[float, float] = (0.35, 0.75),
    aim_error: float = 0.0,
    rng: np.random.Generator | None = None,
    source_id: str = "synthetic",
) -> MotionClip:
    """Raise-hold-retract gesture aimed at the target.

    ``aim_error`` adds a fixed angular offset (rad) to the held pose, emulating
    imperfect human pointing; the hold itself stays stationary.
    """
    target = TargetPoint.from_array(target)
    yaw, pitch = aim_angles(skeleton, target.xyz)
    if aim_error != 0.0:
        rng = rng if rng is not None else np.random.default_rng(0)
        yaw += rng.uniform(-aim_error, aim_error)
        pitch += rng.uniform(-aim_error, aim_error)
    n = int(round(duration * fps)) + 1
    t = np.linspace(0.0, 1.0, n)
    raise_end, retract_start = hold
    envelope = np.where(
        t < raise_end,
        _smoothstep(t / raise_end),
        np.where(t <= retract_start, 1.0,
                 1.0 - _smoothstep((t - retract_start) / (1.0 - retract_start))),
    )
    frames_q = np.zeros((n, skeleton.num_joints))
    frames_q[:, 0] = envelope * yaw
    frames_q[:, 1] = envelope * pitch
    return MotionClip(
        fps=fps,
        frames_q=frames_q,
        skeleton=skeleton,
        target=target,
        handedness="right",
        source_id=source_id,
    )


def make_rest_take(skeleton: SkeletonModel, fps: float = 30.0,
                   duration: float = 3.0) -> MotionClip:
    n = int(round(duration * fps)) + 1
    return MotionClip(
        fps=fps,
        frames_q=np.zeros((n, skeleton.num_joints)),
        skeleton=skeleton,
        source_id="rest",
    )


def make_multi_gesture_take(
    skeleton: SkeletonModel,
    targets,
    fps: float = 30.0,
    gesture_duration: float = 2.0,
    rest_duration: float = 1.5,
    source_id: str = "take",
) -> MotionClip:
    """Concatenate rest / gesture / rest ... / gesture / rest into one take."""
    rest_n = int(round(rest_duration * fps))
    blocks = [np.zeros((rest_n, skeleton.num_joints))]
    for target in targets:
        clip = make_pointing_clip(skeleton, target, fps=fps,
                                  duration=gesture_duration)
        blocks.append(clip.frames_q)
        blocks.append(np.zeros((rest_n, skeleton.num_joints)))
    return MotionClip(
        fps=fps,
        frames_q=np.concatenate(blocks, axis=0),
        skeleton=skeleton,
        source_id=source_id,
    )


def make_library(
    skeleton: SkeletonModel,
    targets,
    fps: float = 30.0,
    duration: float = 2.0,
    aim_error: float = 0.0,
    seed: int = 0,
) -> ClipLibrary:
    rng = np.random.default_rng(seed)
    clips = [
        make_pointing_clip(skeleton, t, fps=fps, duration=duration,
                           aim_error=aim_error, rng=rng,
                           source_id=f"demo{i:03d}")
        for i, t in enumerate(targets)
    ]
    return ClipLibrary(clips=clips, skeleton=skeleton,
                       partitions={c.source_id: "front" for c in clips})
