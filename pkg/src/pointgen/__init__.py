"""Learning and evaluating human-like pointing gestures on a simulated arm."""

from .geometry import (
    REWARD_MAX,
    PointingFrame,
    PointingMeasure,
    RewardWeights,
    TargetPoint,
    alignment_measure,
    combined_reward,
)
from .kinematics import CharacterState, forward_kinematics, observe, phase_of
from .skeleton import (
    JointState,
    SimConfig,
    SkeletonModel,
    make_desk_arm,
    make_toy_arm,
)

__all__ = [
    "REWARD_MAX",
    "PointingFrame",
    "PointingMeasure",
    "RewardWeights",
    "TargetPoint",
    "alignment_measure",
    "combined_reward",
    "CharacterState",
    "forward_kinematics",
    "observe",
    "phase_of",
    "JointState",
    "SimConfig",
    "SkeletonModel",
    "make_desk_arm",
    "make_toy_arm",
]
