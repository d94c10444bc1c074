"""Evaluation metrics: surface coverage, travel distance and per-view statistics.

Coverage is the fraction of area-uniform ground-truth surface samples that
have at least one observed point within the registration distance ``r_d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .sensor_sim import SceneMesh

GT_CAP = 1_000_000


@dataclass(frozen=True)
class MetricsConfig:
    r_d: float = 0.005
    gt_density: float | None = None  # samples per square metre of surface
    gt_seed: int = 0

    def __post_init__(self):
        if not self.r_d > 0:
            raise ValueError("r_d must be positive")
        if self.gt_density is not None and not self.gt_density > 0:
            raise ValueError("gt_density must be positive")

    def sample_count(self, area: float, epsilon: float) -> int:
        """Explicit density, else ten samples per expected stored point, capped."""
        if self.gt_density is not None:
            return max(1, min(GT_CAP, math.ceil(self.gt_density * area)))
        return max(1, min(GT_CAP, 10 * math.ceil(area / epsilon ** 2)))


def sample_ground_truth(mesh: SceneMesh, count: int, seed: int) -> np.ndarray:
    """``count`` points uniformly distributed over the mesh surface."""
    areas = mesh.triangle_areas()
    total = areas.sum()
    if not total > 0:
        raise ValueError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=count, p=areas / total)
    uv = rng.random((count, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    c = mesh.corners[tri]
    return c[:, 0] + uv[:, :1] * (c[:, 1] - c[:, 0]) + uv[:, 1:] * (c[:, 2] - c[:, 0])


def surface_coverage(gt, observed, r_d: float) -> float:
    """Fraction of ``gt`` samples with an observed point within ``r_d``."""
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    if len(gt) == 0:
        raise ValueError("ground truth is empty")
    obs = getattr(observed, "positions", observed)
    obs = np.asarray(obs, dtype=np.float64).reshape(-1, 3)
    if len(obs) == 0:
        return 0.0
    dist, _ = cKDTree(obs).query(gt, distance_upper_bound=r_d)
    return float(np.count_nonzero(dist <= r_d)) / len(gt)


class CoverageTracker:
    """Incremental form of :func:`surface_coverage` for a growing observation."""

    def __init__(self, gt, r_d: float):
        self.gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
        if len(self.gt) == 0:
            raise ValueError("ground truth is empty")
        self.r_d = r_d
        self.tree = cKDTree(self.gt)
        self.covered = np.zeros(len(self.gt), dtype=bool)

    def add(self, points) -> float:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(pts):
            for hits in self.tree.query_ball_point(pts, self.r_d):
                self.covered[hits] = True
        return self.coverage

    @property
    def coverage(self) -> float:
        return float(np.count_nonzero(self.covered)) / len(self.gt)


def travel_distance(history) -> float:
    """Straight-line length of the path through the views' positions."""
    pos = np.array([getattr(v, "position", v) for v in history], dtype=np.float64).reshape(-1, 3)
    if len(pos) == 0:
        raise ValueError("history is empty")
    return float(np.linalg.norm(np.diff(pos, axis=0), axis=1).sum())


@dataclass(frozen=True)
class PerViewStats:
    frontiers: np.ndarray  # frontiers resolved by each view
    gains: np.ndarray  # coverage gained by each view

    @property
    def mean_frontiers(self) -> float:
        return float(self.frontiers.mean()) if len(self.frontiers) else 0.0

    @property
    def mean_gain(self) -> float:
        return float(self.gains.mean()) if len(self.gains) else 0.0


def per_view_stats(frontiers_resolved, coverage) -> PerViewStats:
    """Per-view deltas from a run log.

    ``frontiers_resolved[i]`` is the number of frontiers that stopped being
    frontiers after view ``i``; ``coverage[i]`` is the coverage after view
    ``i`` (coverage before the first view is zero).
    """
    fr = np.asarray(frontiers_resolved, dtype=np.float64)
    cov = np.asarray(coverage, dtype=np.float64)
    if fr.shape != cov.shape:
        raise ValueError("run log columns differ in length")
    return PerViewStats(fr, np.diff(cov, prepend=0.0))
