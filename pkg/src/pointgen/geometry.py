"""Pointing-reward mathematics, reward composition, and target-space samplers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# maximum of the pointing reward, attained at zero alignment angle
REWARD_MAX = (np.e - 1.0) / np.e


class DegenerateGeometry(ValueError):
    """Zero-length vector or zero-extent sample set where extent is required."""


class SamplerExhausted(RuntimeError):
    """Rejection sampler hit its attempt cap."""

    def __init__(self, attempts: int):
        super().__init__(f"rejection sampling exhausted after {attempts} attempts")
        self.attempts = attempts


class TargetPoint(NamedTuple):
    """A 3D pointing position in the world frame (meters)."""

    x: float
    y: float
    z: float

    @property
    def xyz(self) -> np.ndarray:
        return np.array(self, dtype=float)

    @classmethod
    def from_array(cls, a) -> "TargetPoint":
        a = np.asarray(a, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape(3)


@dataclass(frozen=True)
class PointingFrame:
    """Elbow (E), hand (H) and target (T) positions defining the pointing rays."""

    elbow: np.ndarray
    hand: np.ndarray
    target: np.ndarray

    @classmethod
    def of(cls, elbow, hand, target) -> "PointingFrame":
        return cls(_vec(elbow), _vec(hand), _vec(target))


@dataclass(frozen=True)
class PointingMeasure:
    angle: float      # rad, in [0, pi]
    theta_hat: float  # 1 - angle/pi, in [0, 1]
    reward: float     # (e^theta_hat - 1) / e, in [0, REWARD_MAX]


def alignment_measure(frame: PointingFrame) -> PointingMeasure:
    """Angle between the elbow-to-hand ray and hand-to-target vector, with the
    exponential pointing reward of its normalized complement."""
    v_eh = frame.hand - frame.elbow
    v_ht = frame.target - frame.hand
    n_eh = np.linalg.norm(v_eh)
    n_ht = np.linalg.norm(v_ht)
    if n_eh == 0.0 or n_ht == 0.0:
        raise DegenerateGeometry("zero-length pointing vector")
    cosang = float(np.clip(v_eh @ v_ht / (n_eh * n_ht), -1.0, 1.0))
    angle = float(np.arccos(cosang))
    theta_hat = 1.0 - angle / np.pi
    reward = (np.exp(theta_hat) - 1.0) / np.e
    return PointingMeasure(angle=angle, theta_hat=theta_hat, reward=reward)


def pointing_reward(elbow, hand, target) -> float:
    """Fast scalar path used in simulation loops."""
    return alignment_measure(PointingFrame.of(elbow, hand, target)).reward


@dataclass(frozen=True)
class RewardWeights:
    w_imitation: float = 0.5
    w_task: float = 0.5

    def __post_init__(self) -> None:
        if self.w_imitation < 0 or self.w_task < 0:
            raise ValueError("reward weights must be non-negative")


def combined_reward(r_imitation: float, r_task: float,
                    weights: RewardWeights = RewardWeights()) -> float:
    if not (np.isfinite(r_imitation) and np.isfinite(r_task)):
        raise ValueError("non-finite reward input")
    return weights.w_imitation * r_imitation + weights.w_task * r_task


# --- samplers -----------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def perturb_target(gt: TargetPoint, rng, half_width: float = 0.10) -> TargetPoint:
    """Uniform draw in an axis-aligned 20x20x20 cm box centered at gt."""
    rng = _rng(rng)
    offset = rng.uniform(-half_width, half_width, size=3)
    return TargetPoint.from_array(_vec(gt) + offset)


@dataclass(frozen=True)
class HalfCylinderRange:
    """Target range parameterized by height, arc angle and radius about a
    vertical axis through the anchor."""

    height: tuple[float, float]
    arc: tuple[float, float]      # rad; 0 faces +y, positive toward +x
    radius: tuple[float, float]
    anchor: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        for lo, hi in (self.height, self.arc, self.radius):
            if lo > hi:
                raise ValueError("range min exceeds max")
        if self.radius[0] < 0:
            raise ValueError("radius must be non-negative")

    def contains(self, point, atol: float = 1e-9) -> bool:
        h, phi, r = cylinder_params(point, self.anchor)
        return (
            self.height[0] - atol <= h <= self.height[1] + atol
            and self.arc[0] - atol <= phi <= self.arc[1] + atol
            and self.radius[0] - atol <= r <= self.radius[1] + atol
        )


def cylinder_params(point, anchor) -> tuple[float, float, float]:
    """(height, arc, radius) of a point about the vertical axis at anchor."""
    rel = _vec(point) - _vec(anchor)
    h = float(rel[2])
    r = float(np.hypot(rel[0], rel[1]))
    phi = float(np.arctan2(rel[0], rel[1]))
    return h, phi, r


def cylinder_to_cartesian(h: float, phi: float, r: float, anchor) -> TargetPoint:
    a = _vec(anchor)
    return TargetPoint(a[0] + r * np.sin(phi), a[1] + r * np.cos(phi), a[2] + h)


def fit_half_cylinder(targets: Sequence, anchor=(0.0, 0.0, 0.0)) -> HalfCylinderRange:
    """Per-parameter min/max ranges of targets in cylindrical coordinates."""
    if len(targets) < 2:
        raise ValueError("need at least 2 targets to fit a range")
    params = np.array([cylinder_params(t, anchor) for t in targets])
    if np.allclose(params.max(axis=0), params.min(axis=0)):
        raise DegenerateGeometry("all targets coincident; zero-extent range")
    return HalfCylinderRange(
        height=(float(params[:, 0].min()), float(params[:, 0].max())),
        arc=(float(params[:, 1].min()), float(params[:, 1].max())),
        radius=(float(params[:, 2].min()), float(params[:, 2].max())),
        anchor=_vec(anchor),
    )


def sample_test_targets(range_: HalfCylinderRange, n: int = 100,
                        seed=0) -> list[TargetPoint]:
    """Independent uniform draws of (height, arc, radius) inside the range."""
    rng = _rng(seed)
    h = rng.uniform(range_.height[0], range_.height[1], size=n)
    phi = rng.uniform(range_.arc[0], range_.arc[1], size=n)
    r = rng.uniform(range_.radius[0], range_.radius[1], size=n)
    return [cylinder_to_cartesian(h[i], phi[i], r[i], range_.anchor)
            for i in range(n)]


def sample_distractors(target: TargetPoint, range_: HalfCylinderRange, rng,
                       min_dist: float = 0.20, max_dist: float = 0.40,
                       max_attempts: int = 10_000) -> tuple[TargetPoint, TargetPoint]:
    """Rejection-sample two candidates 20-40 cm from the target within range."""
    rng = _rng(rng)
    t = _vec(target)
    accepted: list[TargetPoint] = []
    for attempt in range(1, max_attempts + 1):
        cand = sample_test_targets(range_, n=1, seed=rng)[0]
        d = float(np.linalg.norm(cand.xyz - t))
        if min_dist <= d <= max_dist:
            accepted.append(cand)
            if len(accepted) == 2:
                return accepted[0], accepted[1]
    raise SamplerExhausted(max_attempts)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, p, atol: float = 1e-12) -> bool:
        p = _vec(p)
        return bool(np.all(p >= self.lo - atol) and np.all(p <= self.hi + atol))


def target_limits(targets: Sequence) -> Box:
    pts = np.array([_vec(t) for t in targets])
    return Box(lo=pts.min(axis=0), hi=pts.max(axis=0))


class GridShapeError(ValueError):
    def __init__(self, n: int, nearest: int):
        super().__init__(
            f"n={n} is not a cube lattice size; nearest feasible n is {nearest}")
        self.nearest = nearest


def spherical_grid(limits: Box, n: int = 1000) -> list[TargetPoint]:
    """Deterministic radius-major k x k x k lattice on concentric spherical
    shells around the box center, coordinate-clipped into the box."""
    k = round(n ** (1.0 / 3.0))
    if k ** 3 != n:
        raise GridShapeError(n, k ** 3)
    center = 0.5 * (limits.lo + limits.hi)
    r_max = 0.5 * float(np.linalg.norm(limits.hi - limits.lo))
    if r_max == 0.0:
        raise DegenerateGeometry("zero-extent limits")
    radii = np.linspace(r_max / k, r_max, k)
    azimuths = np.linspace(0.0, 2.0 * np.pi, k, endpoint=False)
    elevations = np.linspace(-0.5 * np.pi, 0.5 * np.pi, k)
    out = []
    for r in radii:
        for el in elevations:
            for az in azimuths:
                p = center + r * np.array(
                    [np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)]
                )
                p = np.clip(p, limits.lo, limits.hi)
                out.append(TargetPoint.from_array(p))
    return out


def export_targets(path: str | Path,
                   rows: Iterable[tuple[str, TargetPoint, str]]) -> None:
    """Write (id, x, y, z, role) rows as delimited text."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "x", "y", "z", "role"])
        for ident, point, role in rows:
            w.writerow([ident, point.x, point.y, point.z, role])
