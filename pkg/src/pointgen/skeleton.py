"""Articulated-chain skeleton model, joint state, and skeleton file I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SKELETON_SCHEMA = "pointgen-skeleton/1"


class SkeletonError(ValueError):
    """Raised when a skeleton definition violates its invariants."""


@dataclass(frozen=True)
class LinkSpec:
    """One link of the chain.

    ``axis`` is the revolute joint axis in the parent frame; ``None`` marks a
    fixed (welded) link such as the root or a passive segment.
    """

    name: str
    parent: int
    offset: np.ndarray
    mass: float
    axis: np.ndarray | None = None
    limits: tuple[float, float] = (-np.pi, np.pi)


@dataclass
class SkeletonModel:
    """Ordered tree of links with PD gains and named elbow/hand indices."""

    links: list[LinkSpec]
    pd_gains: np.ndarray        # (n_joints, 2): kp, kd per actuated joint
    torque_limit: np.ndarray    # (n_joints,)
    elbow_index: int
    hand_index: int
    root_index: int = 0
    mirror_map: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.links:
            raise SkeletonError("skeleton has no links")
        for i, link in enumerate(self.links):
            if i == self.root_index:
                if link.parent != -1:
                    raise SkeletonError("root link must have parent -1")
            elif not (-1 <= link.parent < i):
                raise SkeletonError(f"link {link.name!r}: parent index must precede it")
            if not np.all(np.isfinite(link.offset)):
                raise SkeletonError(f"link {link.name!r}: non-finite offset")
            if link.mass <= 0:
                raise SkeletonError(f"link {link.name!r}: mass must be positive")
            if link.axis is not None and np.linalg.norm(link.axis) == 0:
                raise SkeletonError(f"link {link.name!r}: zero joint axis")
            if link.limits[0] > link.limits[1]:
                raise SkeletonError(f"link {link.name!r}: inverted joint limits")
        self.pd_gains = np.asarray(self.pd_gains, dtype=float).reshape(-1, 2)
        self.torque_limit = np.asarray(self.torque_limit, dtype=float).reshape(-1)
        n = self.num_joints
        if self.pd_gains.shape[0] != n or self.torque_limit.shape[0] != n:
            raise SkeletonError("pd_gains/torque_limit length must equal joint count")
        if np.any(self.pd_gains <= 0):
            raise SkeletonError("pd gains must be strictly positive")
        for idx, what in ((self.elbow_index, "elbow"), (self.hand_index, "hand")):
            if not 0 <= idx < len(self.links):
                raise SkeletonError(f"{what} index out of range")
        if not self._is_descendant(self.hand_index, self.elbow_index):
            raise SkeletonError("hand must be a descendant of the elbow")

    def _is_descendant(self, idx: int, ancestor: int) -> bool:
        while idx != -1:
            if idx == ancestor:
                return True
            idx = self.links[idx].parent
        return False

    @property
    def num_links(self) -> int:
        return len(self.links)

    @property
    def joint_links(self) -> list[int]:
        """Link indices that carry an actuated revolute joint, in tree order."""
        return [i for i, l in enumerate(self.links) if l.axis is not None]

    @property
    def num_joints(self) -> int:
        return len(self.joint_links)

    @property
    def joint_names(self) -> list[str]:
        return [self.links[i].name for i in self.joint_links]

    @property
    def joint_limits(self) -> np.ndarray:
        return np.array([self.links[i].limits for i in self.joint_links])

    def link_index(self, name: str) -> int:
        for i, link in enumerate(self.links):
            if link.name == name:
                return i
        raise KeyError(name)

    def descendants(self, idx: int) -> list[int]:
        out = []
        for j in range(idx, len(self.links)):
            if self._is_descendant(j, idx):
                out.append(j)
        return out


@dataclass
class JointState:
    """Generalized coordinates: joint angles/velocities plus the root pose."""

    q: np.ndarray
    qdot: np.ndarray
    root_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    root_quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        self.qdot = np.asarray(self.qdot, dtype=float).reshape(-1)
        self.root_pos = np.asarray(self.root_pos, dtype=float).reshape(3)
        self.root_quat = np.asarray(self.root_quat, dtype=float).reshape(4)

    def validate(self, skeleton: SkeletonModel) -> None:
        n = skeleton.num_joints
        if self.q.shape != (n,) or self.qdot.shape != (n,):
            raise ValueError(
                f"joint state dimension {self.q.shape[0]} does not match "
                f"skeleton joint count {n}"
            )
        for arr in (self.q, self.qdot, self.root_pos, self.root_quat):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite joint state")

    def copy(self) -> "JointState":
        return JointState(self.q.copy(), self.qdot.copy(),
                          self.root_pos.copy(), self.root_quat.copy())


@dataclass
class SimConfig:
    """Integrator settings; control at 30 Hz with 4 semi-implicit Euler substeps."""

    control_dt: float = 1.0 / 30.0
    substeps: int = 4
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    joint_damping: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(3)
        if self.control_dt <= 0:
            raise ValueError("control_dt must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


def rest_state(skeleton: SkeletonModel) -> JointState:
    n = skeleton.num_joints
    return JointState(np.zeros(n), np.zeros(n))


# --- factories ----------------------------------------------------------------

def make_toy_arm() -> SkeletonModel:
    """2-joint desk-scale arm: shoulder yaw (z) + shoulder pitch (x).

    The arm hangs straight down at q = 0; elbow and hand are welded segments,
    so the elbow-to-hand ray is steered by the two shoulder angles alone.
    """
    links = [
        LinkSpec("root", -1, np.zeros(3), 2.0),
        LinkSpec("shoulder_yaw", 0, np.array([0.0, 0.0, 0.25]), 0.3,
                 axis=np.array([0.0, 0.0, 1.0]), limits=(-2.2, 2.2)),
        LinkSpec("shoulder_pitch", 1, np.zeros(3), 0.3,
                 axis=np.array([1.0, 0.0, 0.0]), limits=(-0.4, 2.9)),
        LinkSpec("elbow", 2, np.array([0.0, 0.0, -0.30]), 0.8),
        LinkSpec("hand", 3, np.array([0.0, 0.0, -0.25]), 0.4),
    ]
    return SkeletonModel(
        links=links,
        pd_gains=np.array([[60.0, 8.0], [60.0, 8.0]]),
        torque_limit=np.array([40.0, 40.0]),
        elbow_index=3,
        hand_index=4,
        mirror_map={l.name: l.name for l in links},
    )


def make_desk_arm(with_wrist: bool = False) -> SkeletonModel:
    """Torso+arm chain: 3-DoF shoulder (stacked z/x/z axes) + 1-DoF elbow."""
    links = [
        LinkSpec("root", -1, np.zeros(3), 4.0),
        LinkSpec("shoulder_yaw", 0, np.array([0.0, 0.0, 0.25]), 0.2,
                 axis=np.array([0.0, 0.0, 1.0]), limits=(-2.2, 2.2)),
        LinkSpec("shoulder_pitch", 1, np.zeros(3), 0.2,
                 axis=np.array([1.0, 0.0, 0.0]), limits=(-0.4, 2.9)),
        LinkSpec("shoulder_twist", 2, np.zeros(3), 0.2,
                 axis=np.array([0.0, 0.0, 1.0]), limits=(-1.5, 1.5)),
        LinkSpec("elbow", 3, np.array([0.0, 0.0, -0.30]), 0.8,
                 axis=np.array([1.0, 0.0, 0.0]), limits=(-2.4, 0.1)),
    ]
    hand_parent = 4
    if with_wrist:
        links.append(LinkSpec("wrist", 4, np.array([0.0, 0.0, -0.25]), 0.2,
                              axis=np.array([1.0, 0.0, 0.0]), limits=(-0.8, 0.8)))
        links.append(LinkSpec("hand", 5, np.array([0.0, 0.0, -0.08]), 0.3))
    else:
        links.append(LinkSpec("hand", hand_parent, np.array([0.0, 0.0, -0.25]), 0.4))
    n_joints = sum(1 for l in links if l.axis is not None)
    return SkeletonModel(
        links=links,
        pd_gains=np.tile([60.0, 8.0], (n_joints, 1)),
        torque_limit=np.full(n_joints, 40.0),
        elbow_index=next(i for i, l in enumerate(links) if l.name == "elbow"),
        hand_index=next(i for i, l in enumerate(links) if l.name == "hand"),
        mirror_map={l.name: l.name for l in links},
    )


# --- skeleton file I/O --------------------------------------------------------

def skeleton_to_dict(skeleton: SkeletonModel) -> dict:
    return {
        "schema": SKELETON_SCHEMA,
        "links": [
            {
                "name": l.name,
                "parent": l.parent,
                "offset": list(map(float, l.offset)),
                "mass": l.mass,
                "axis": None if l.axis is None else list(map(float, l.axis)),
                "limits": list(l.limits),
            }
            for l in skeleton.links
        ],
        "pd_gains": skeleton.pd_gains.tolist(),
        "torque_limit": skeleton.torque_limit.tolist(),
        "root": skeleton.links[skeleton.root_index].name,
        "elbow": skeleton.links[skeleton.elbow_index].name,
        "hand": skeleton.links[skeleton.hand_index].name,
        "mirror_map": skeleton.mirror_map,
    }


def skeleton_from_dict(data: dict) -> SkeletonModel:
    if data.get("schema") != SKELETON_SCHEMA:
        raise SkeletonError(f"unsupported skeleton schema: {data.get('schema')!r}")
    links = [
        LinkSpec(
            name=d["name"],
            parent=int(d["parent"]),
            offset=np.asarray(d["offset"], dtype=float),
            mass=float(d["mass"]),
            axis=None if d.get("axis") is None else np.asarray(d["axis"], dtype=float),
            limits=tuple(d.get("limits", (-np.pi, np.pi))),
        )
        for d in data["links"]
    ]
    names = [l.name for l in links]
    return SkeletonModel(
        links=links,
        pd_gains=np.asarray(data["pd_gains"], dtype=float),
        torque_limit=np.asarray(data["torque_limit"], dtype=float),
        elbow_index=names.index(data["elbow"]),
        hand_index=names.index(data["hand"]),
        root_index=names.index(data.get("root", names[0])),
        mirror_map=data.get("mirror_map"),
    )


def save_skeleton(skeleton: SkeletonModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(skeleton_to_dict(skeleton), indent=2))


def load_skeleton(path: str | Path) -> SkeletonModel:
    return skeleton_from_dict(json.loads(Path(path).read_text()))
