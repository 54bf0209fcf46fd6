"""Motion clip ingestion, segmentation, mirroring and accuracy profiling."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .geometry import REWARD_MAX, TargetPoint, pointing_reward
from .kinematics import forward_kinematics
from .skeleton import (
    JointState,
    SkeletonModel,
    skeleton_from_dict,
    skeleton_to_dict,
)

LIBRARY_SCHEMA = "pointgen-cliplib/1"

HOLD_SPEED_LIMIT = 0.5    # m/s
HOLD_WINDOW = 0.15        # s, centered on the evaluated frame


class ClipSchemaError(ValueError):
    """Malformed clip/library file or invariant violation."""


class MirrorError(ValueError):
    """Skeleton lacks a usable left/right correspondence."""


@dataclass
class MotionClip:
    """Time-indexed joint-angle poses with an annotated pointing target."""

    fps: float
    frames_q: np.ndarray          # (T, n_joints)
    skeleton: SkeletonModel
    target: TargetPoint | None = None
    handedness: str = "right"
    source_id: str = ""
    is_mirrored: bool = False
    frames_root_pos: np.ndarray | None = None   # (T, 3)
    frames_root_quat: np.ndarray | None = None  # (T, 4)

    def __post_init__(self) -> None:
        self.frames_q = np.asarray(self.frames_q, dtype=float)
        if self.frames_q.ndim != 2 or self.frames_q.shape[0] < 2:
            raise ClipSchemaError(f"clip {self.source_id!r}: needs >= 2 frames")
        if self.fps <= 0:
            raise ClipSchemaError(f"clip {self.source_id!r}: fps must be positive")
        if self.frames_q.shape[1] != self.skeleton.num_joints:
            raise ClipSchemaError(
                f"clip {self.source_id!r}: frame dimension does not match skeleton")
        if not np.all(np.isfinite(self.frames_q)):
            raise ClipSchemaError(f"clip {self.source_id!r}: non-finite frames")
        if self.target is not None and not np.all(np.isfinite(self.target.xyz)):
            raise ClipSchemaError(f"clip {self.source_id!r}: non-finite target")
        if self.handedness not in ("left", "right"):
            raise ClipSchemaError(f"clip {self.source_id!r}: bad handedness")
        T = self.frames_q.shape[0]
        if self.frames_root_pos is None:
            self.frames_root_pos = np.zeros((T, 3))
        if self.frames_root_quat is None:
            self.frames_root_quat = np.tile([1.0, 0.0, 0.0, 0.0], (T, 1))
        self.frames_root_pos = np.asarray(self.frames_root_pos, dtype=float)
        self.frames_root_quat = np.asarray(self.frames_root_quat, dtype=float)
        self._link_pos: np.ndarray | None = None

    @property
    def num_frames(self) -> int:
        return self.frames_q.shape[0]

    @property
    def duration(self) -> float:
        return (self.num_frames - 1) / self.fps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.num_frames) / self.fps

    def joint_state(self, i: int) -> JointState:
        qdot = self.joint_velocities()[i]
        return JointState(self.frames_q[i], qdot,
                          self.frames_root_pos[i], self.frames_root_quat[i])

    def joint_velocities(self) -> np.ndarray:
        return np.gradient(self.frames_q, 1.0 / self.fps, axis=0)

    def link_positions(self) -> np.ndarray:
        """(T, n_links, 3) world link positions, cached."""
        if self._link_pos is None:
            qdot = self.joint_velocities()
            out = np.zeros((self.num_frames, self.skeleton.num_links, 3))
            for i in range(self.num_frames):
                st = JointState(self.frames_q[i], qdot[i],
                                self.frames_root_pos[i], self.frames_root_quat[i])
                out[i] = forward_kinematics(self.skeleton, st).positions
            self._link_pos = out
        return self._link_pos

    def hand_positions(self) -> np.ndarray:
        return self.link_positions()[:, self.skeleton.hand_index]

    def elbow_positions(self) -> np.ndarray:
        return self.link_positions()[:, self.skeleton.elbow_index]

    def hand_speeds(self) -> np.ndarray:
        return np.linalg.norm(
            np.gradient(self.hand_positions(), 1.0 / self.fps, axis=0), axis=1)


@dataclass
class ClipLibrary:
    clips: list[MotionClip]
    skeleton: SkeletonModel
    partitions: dict[str, str] = field(default_factory=dict)  # source_id -> label

    def __post_init__(self) -> None:
        for clip in self.clips:
            if clip.skeleton is not self.skeleton and (
                    clip.skeleton.num_joints != self.skeleton.num_joints):
                raise ClipSchemaError(
                    f"clip {clip.source_id!r} does not share the library skeleton")

    @property
    def targets(self) -> list[TargetPoint]:
        return [c.target for c in self.clips if c.target is not None]


# --- library I/O --------------------------------------------------------------

def library_to_dict(library: ClipLibrary) -> dict:
    return {
        "schema": LIBRARY_SCHEMA,
        "skeleton": skeleton_to_dict(library.skeleton),
        "clips": [
            {
                "source_id": c.source_id,
                "fps": c.fps,
                "joint_names": c.skeleton.joint_names,
                "handedness": c.handedness,
                "is_mirrored": c.is_mirrored,
                "target": None if c.target is None else list(c.target),
                "frames_q": c.frames_q.tolist(),
                "frames_root_pos": c.frames_root_pos.tolist(),
                "frames_root_quat": c.frames_root_quat.tolist(),
            }
            for c in library.clips
        ],
        "partitions": library.partitions,
    }


def library_from_dict(data: dict) -> ClipLibrary:
    if data.get("schema") != LIBRARY_SCHEMA:
        raise ClipSchemaError(f"unsupported library schema: {data.get('schema')!r}")
    skeleton = skeleton_from_dict(data["skeleton"])
    clips = []
    for d in data["clips"]:
        if d.get("joint_names") != skeleton.joint_names:
            raise ClipSchemaError(
                f"clip {d.get('source_id')!r}: joint names do not match skeleton")
        try:
            clips.append(
                MotionClip(
                    fps=float(d["fps"]),
                    frames_q=np.asarray(d["frames_q"], dtype=float),
                    skeleton=skeleton,
                    target=None if d.get("target") is None
                    else TargetPoint(*d["target"]),
                    handedness=d.get("handedness", "right"),
                    source_id=d.get("source_id", ""),
                    is_mirrored=bool(d.get("is_mirrored", False)),
                    frames_root_pos=np.asarray(d["frames_root_pos"], dtype=float),
                    frames_root_quat=np.asarray(d["frames_root_quat"], dtype=float),
                )
            )
        except ClipSchemaError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ClipSchemaError(
                f"clip {d.get('source_id')!r}: malformed entry ({exc})") from exc
    if not clips:
        raise ClipSchemaError("empty clip library")
    return ClipLibrary(clips=clips, skeleton=skeleton,
                       partitions=dict(data.get("partitions", {})))


def save_library(library: ClipLibrary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(library_to_dict(library), indent=1))


def load_library(path: str | Path) -> ClipLibrary:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ClipSchemaError(f"malformed library file {path}: {exc}") from exc
    return library_from_dict(data)


# --- segmentation -------------------------------------------------------------

@dataclass
class SegmentConfig:
    min_duration: float = 0.5       # s, minimum span length
    min_separation: float = 1.0     # s, minimum peak spacing
    prominence_frac: float = 0.2    # of the take's displacement range
    rest_frac: float = 0.1          # displacement fraction treated as rest


def sagittal_displacement(take: MotionClip) -> np.ndarray:
    """Hand displacement from the first frame, projected on the y-z plane."""
    hand = take.hand_positions()
    rest = hand[0]
    return np.linalg.norm(hand[:, 1:] - rest[1:], axis=1)


def segment_pointing_clips(take: MotionClip,
                           config: SegmentConfig = SegmentConfig()
                           ) -> list[MotionClip]:
    """Split a continuous take at peaks of sagittal hand displacement into
    raise-hold-retract spans bounded by the hand near its rest position."""
    if take.duration < config.min_duration:
        raise ValueError("take shorter than the minimum gesture duration")
    disp = sagittal_displacement(take)
    rng_ = disp.max() - disp.min()
    if rng_ <= 0:
        return []
    peaks, _ = find_peaks(
        disp,
        prominence=config.prominence_frac * rng_,
        distance=max(1, int(config.min_separation * take.fps)),
    )
    rest_level = disp.min() + config.rest_frac * rng_
    spans = []
    for p in peaks:
        lo = p
        while lo > 0 and disp[lo] > rest_level:
            lo -= 1
        hi = p
        while hi < len(disp) - 1 and disp[hi] > rest_level:
            hi += 1
        if (hi - lo) / take.fps < config.min_duration:
            continue
        spans.append((lo, hi))
    out = []
    for i, (lo, hi) in enumerate(spans):
        out.append(
            MotionClip(
                fps=take.fps,
                frames_q=take.frames_q[lo:hi + 1].copy(),
                skeleton=take.skeleton,
                target=None,
                handedness=take.handedness,
                source_id=f"{take.source_id}#span{i}",
                frames_root_pos=take.frames_root_pos[lo:hi + 1].copy(),
                frames_root_quat=take.frames_root_quat[lo:hi + 1].copy(),
            )
        )
    return out


# --- mirroring ----------------------------------------------------------------

_MIRROR = np.diag([-1.0, 1.0, 1.0])


def mirror_clip(clip: MotionClip) -> MotionClip:
    """Reflect the clip across the sagittal plane (x -> -x).

    Requires the skeleton's left/right joint correspondence map; on symmetric
    chains every joint maps to itself. Joint angles flip sign when the mirrored
    axis equals the corresponding joint's axis, and keep sign when it is the
    negated axis.
    """
    skeleton = clip.skeleton
    if skeleton.mirror_map is None:
        raise MirrorError("skeleton has no left/right correspondence map")
    link_names = [l.name for l in skeleton.links]
    for link in skeleton.links:
        corr_name = skeleton.mirror_map.get(link.name, link.name)
        corr = skeleton.links[link_names.index(corr_name)]
        if not np.allclose(_MIRROR @ link.offset, corr.offset, atol=1e-9):
            raise MirrorError(
                f"link {link.name!r}: offset is not mirror-consistent "
                f"with {corr_name!r}")
    names = skeleton.joint_names
    index_of = {n: j for j, n in enumerate(names)}
    perm = np.zeros(len(names), dtype=int)
    sign = np.zeros(len(names))
    for j, (name, li) in enumerate(zip(names, skeleton.joint_links)):
        if name not in skeleton.mirror_map:
            raise MirrorError(f"joint {name!r} missing from correspondence map")
        other = skeleton.mirror_map[name]
        if other not in index_of:
            raise MirrorError(f"corresponding joint {other!r} not in skeleton")
        k = index_of[other]
        axis = np.asarray(skeleton.links[li].axis, dtype=float)
        other_axis = np.asarray(
            skeleton.links[skeleton.joint_links[k]].axis, dtype=float)
        mirrored = _MIRROR @ axis
        if np.allclose(mirrored, other_axis, atol=1e-9):
            s = -1.0
        elif np.allclose(mirrored, -other_axis, atol=1e-9):
            s = 1.0
        else:
            raise MirrorError(
                f"joint {name!r}: axis is not mirror-consistent with {other!r}")
        perm[k] = j
        sign[k] = s

    frames_q = sign[None, :] * clip.frames_q[:, perm]
    root_pos = clip.frames_root_pos @ _MIRROR.T
    root_quat = clip.frames_root_quat * np.array([1.0, 1.0, -1.0, -1.0])
    target = None
    if clip.target is not None:
        target = TargetPoint(-clip.target.x, clip.target.y, clip.target.z)
    return MotionClip(
        fps=clip.fps,
        frames_q=frames_q,
        skeleton=skeleton,
        target=target,
        handedness="left" if clip.handedness == "right" else "right",
        source_id=clip.source_id,
        is_mirrored=not clip.is_mirrored,
        frames_root_pos=root_pos,
        frames_root_quat=root_quat,
    )


# --- accuracy and profiles ----------------------------------------------------

def frame_rewards(clip: MotionClip, target: TargetPoint | None = None) -> np.ndarray:
    """Per-frame pointing reward of the elbow-hand ray against the target."""
    t = target if target is not None else clip.target
    if t is None:
        raise ValueError("clip has no target")
    elbow = clip.elbow_positions()
    hand = clip.hand_positions()
    return np.array([pointing_reward(elbow[i], hand[i], t.xyz)
                     for i in range(clip.num_frames)])


def hold_frames(clip: MotionClip, speed_limit: float = HOLD_SPEED_LIMIT,
                window: float = HOLD_WINDOW) -> np.ndarray:
    """Indices of frames whose centered window keeps the hand below the
    hold speed limit throughout."""
    speeds = clip.hand_speeds()
    half = max(1, int(round(0.5 * window * clip.fps)))
    ok = []
    for i in range(clip.num_frames):
        lo = max(0, i - half)
        hi = min(clip.num_frames, i + half + 1)
        if np.all(speeds[lo:hi] < speed_limit):
            ok.append(i)
    return np.array(ok, dtype=int)


@dataclass(frozen=True)
class ClipAccuracy:
    raw: float
    normalized: float
    hold_detected: bool
    frame_index: int | None


def clip_accuracy(clip: MotionClip, target: TargetPoint | None = None) -> ClipAccuracy:
    """Maximum pointing reward over quasi-stationary (hold) frames.

    A gesture that never steadies cannot communicate a referent; the no-hold
    case is reported as accuracy 0 with the flag cleared.
    """
    held = hold_frames(clip)
    if held.size == 0:
        return ClipAccuracy(0.0, 0.0, False, None)
    rewards = frame_rewards(clip, target)
    best = held[int(np.argmax(rewards[held]))]
    raw = float(rewards[best])
    return ClipAccuracy(raw, raw / REWARD_MAX, True, int(best))


@dataclass
class ProfileSeries:
    kind: str                 # "accuracy" | "velocity"
    values: np.ndarray        # (n_steps,)
    n_clips: int
    n_steps: int
    normalizer: float | None  # accuracy: REWARD_MAX; velocity: None


def motion_profiles(clips: list[MotionClip], kind: str,
                    n_steps: int = 100) -> ProfileSeries:
    """Time-normalized per-frame accuracy or hand-speed profile, averaged
    across clips."""
    if kind not in ("accuracy", "velocity"):
        raise ValueError(f"unknown profile kind {kind!r}")
    if not clips:
        raise ValueError("empty clip set")
    grid = np.linspace(0.0, 1.0, n_steps)
    rows = np.zeros((len(clips), n_steps))
    for i, clip in enumerate(clips):
        if clip.num_frames < 2:
            raise ValueError(f"clip {clip.source_id!r} too short to resample")
        if kind == "accuracy":
            series = frame_rewards(clip) / REWARD_MAX
        else:
            series = clip.hand_speeds()
        t = np.linspace(0.0, 1.0, clip.num_frames)
        rows[i] = np.interp(grid, t, series)
    return ProfileSeries(
        kind=kind,
        values=rows.mean(axis=0),
        n_clips=len(clips),
        n_steps=n_steps,
        normalizer=REWARD_MAX if kind == "accuracy" else None,
    )


def export_profile(profile: ProfileSeries, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["normalized_time", "value"])
        for i, v in enumerate(profile.values):
            w.writerow([i / (profile.n_steps - 1), v])
