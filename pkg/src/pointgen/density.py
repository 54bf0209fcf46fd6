"""Scott's-rule bandwidths, Gaussian MeanShift clustering, and product-Gaussian
kernel density estimation over the target space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEAN_SHIFT_TOL = 1e-6
MEAN_SHIFT_MAX_ITER = 500


class ZeroVarianceError(ValueError):
    """A dimension has no spread; Scott's rule is undefined."""


def _points(samples) -> np.ndarray:
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def scott_bandwidth(samples, dims: int | None = None) -> np.ndarray:
    """Per-dimension bandwidth h_d = n^(-1/(d+4)) * sigma_d (sample std)."""
    pts = _points(samples)
    n, d = pts.shape
    if dims is not None and dims != d:
        raise ValueError(f"samples have {d} dims, expected {dims}")
    if n < 2:
        raise ValueError("need at least 2 samples")
    sigma = pts.std(axis=0, ddof=1)
    if np.any(sigma == 0):
        bad = int(np.argmax(sigma == 0))
        raise ZeroVarianceError(f"zero variance in dimension {bad}")
    return n ** (-1.0 / (d + 4)) * sigma


@dataclass
class ClusterModel:
    modes: np.ndarray        # (k, d)
    labels: np.ndarray       # (n,)
    bandwidth: float
    converged: np.ndarray    # (n,) per-seed-point convergence flags

    @property
    def num_clusters(self) -> int:
        return self.modes.shape[0]


def mean_shift_cluster(points, bandwidth: float) -> ClusterModel:
    """Gaussian-kernel mean shift from every point; modes merged within
    bandwidth/2; assignment by converged mode."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    pts = _points(points)
    n = pts.shape[0]
    if n < 1:
        raise ValueError("need at least 1 point")
    inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth)
    converged = np.zeros(n, dtype=bool)
    finals = np.zeros_like(pts)
    for i in range(n):
        x = pts[i].copy()
        for _ in range(MEAN_SHIFT_MAX_ITER):
            w = np.exp(-np.sum((pts - x) ** 2, axis=1) * inv2h2)
            new = w @ pts / w.sum()
            if np.linalg.norm(new - x) < MEAN_SHIFT_TOL:
                x = new
                converged[i] = True
                break
            x = new
        finals[i] = x
    modes: list[np.ndarray] = []
    labels = np.zeros(n, dtype=int)
    merge_r = bandwidth / 2.0
    for i in range(n):
        for k, m in enumerate(modes):
            if np.linalg.norm(finals[i] - m) < merge_r:
                labels[i] = k
                break
        else:
            labels[i] = len(modes)
            modes.append(finals[i])
    return ClusterModel(modes=np.array(modes), labels=labels,
                        bandwidth=float(bandwidth), converged=converged)


@dataclass
class KDEModel:
    samples: np.ndarray      # (n, d)
    bandwidths: np.ndarray   # (d,)

    def __post_init__(self) -> None:
        self.samples = _points(self.samples)
        self.bandwidths = np.asarray(self.bandwidths, dtype=float).reshape(-1)
        if self.bandwidths.shape[0] != self.samples.shape[1]:
            raise ValueError("bandwidth count must match sample dimension")
        if np.any(self.bandwidths <= 0):
            raise ValueError("bandwidths must be positive")


def fit_kde(samples, bandwidths=None) -> KDEModel:
    pts = _points(samples)
    if bandwidths is None:
        bandwidths = scott_bandwidth(pts)
    return KDEModel(samples=pts, bandwidths=np.asarray(bandwidths, dtype=float))


def kde_evaluate(model: KDEModel, queries) -> np.ndarray:
    """Product-Gaussian density at each query point."""
    q = _points(queries)
    h = model.bandwidths
    norm = np.prod(h) * (2.0 * np.pi) ** (h.shape[0] / 2.0)
    # (m, n, d) scaled squared distances
    z = (q[:, None, :] - model.samples[None, :, :]) / h
    kern = np.exp(-0.5 * np.sum(z * z, axis=2))
    return kern.sum(axis=1) / (model.samples.shape[0] * norm)
