"""Virtual depth camera: pinhole raycasting of a triangle mesh with range noise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _bvh
from .geometry import View


@dataclass(frozen=True)
class SensorModel:
    theta_x: float  # degrees
    theta_y: float
    omega_x: int  # pixels
    omega_y: int
    sigma: float = 0.0  # range noise std-dev, metres
    max_range: float = math.inf

    def __post_init__(self):
        for a in (self.theta_x, self.theta_y):
            if not 0.0 < a < 180.0:
                raise ValueError("field-of-view angles must lie in (0, 180) degrees")
        if self.omega_x < 1 or self.omega_y < 1:
            raise ValueError("resolution must be at least one pixel")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not self.max_range > 0:
            raise ValueError("max_range must be positive")

    @property
    def half_angle(self) -> float:
        """Radius (rad) of the circular frustum used by visibility prediction."""
        return math.radians(min(self.theta_x, self.theta_y)) / 2.0

    def with_range(self, max_range: float) -> "SensorModel":
        return SensorModel(self.theta_x, self.theta_y, self.omega_x, self.omega_y, self.sigma, max_range)


D435 = SensorModel(69.4, 42.5, 848, 480, 0.01)


class SceneMesh:
    """Triangle soup with a lazily built BVH.  Triangles are double sided."""

    def __init__(self, vertices, triangles):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.triangles) and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise ValueError("triangle index out of range")

    def __repr__(self):
        return f"SceneMesh({len(self.vertices)} vertices, {len(self.triangles)} triangles)"

    @property
    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        c = self.corners
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    @property
    def area(self) -> float:
        return float(self.triangle_areas().sum())

    @property
    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def normalized(self, size: float = 1.0) -> "SceneMesh":
        """Copy centred on its bounding box with the largest extent equal to ``size``."""
        lo, hi = self.bounds
        scale = size / float((hi - lo).max())
        return SceneMesh((self.vertices - 0.5 * (lo + hi)) * scale, self.triangles)

    @cached_property
    def _bvh(self):
        tri = np.ascontiguousarray(self.corners)
        return (tri,) + _bvh.build(tri)

    def raycast(self, origin, directions, max_range=math.inf) -> np.ndarray:
        """Distance to the nearest hit along each unit direction (``inf`` on a miss)."""
        dirs = np.ascontiguousarray(directions, dtype=np.float64).reshape(-1, 3)
        if len(self.triangles) == 0:
            return np.full(len(dirs), np.inf)
        tmax = float(max_range) if math.isfinite(max_range) else 1e300
        return _bvh.cast(*self._bvh, np.asarray(origin, dtype=np.float64), dirs, tmax)


@dataclass(frozen=True)
class CameraFrame:
    origin: np.ndarray
    forward: np.ndarray
    right: np.ndarray
    up: np.ndarray


def pose_from_view(view: View) -> CameraFrame:
    """Roll-free camera frame: ``up`` follows world +z (or +x when looking along z)."""
    f = view.orientation / np.linalg.norm(view.orientation)
    ref = np.array([0.0, 0.0, 1.0])
    if abs(f @ ref) > 1.0 - 1e-9:
        ref = np.array([1.0, 0.0, 0.0])
    up = ref - (ref @ f) * f
    up /= np.linalg.norm(up)
    right = np.cross(up, f)
    return CameraFrame(view.position.copy(), f, right, up)


def pixel_directions(frame: CameraFrame, sensor: SensorModel) -> np.ndarray:
    """Unit ray per pixel centre, row-major (top row first)."""
    tx = math.tan(math.radians(sensor.theta_x) / 2.0)
    ty = math.tan(math.radians(sensor.theta_y) / 2.0)
    u = (2.0 * (np.arange(sensor.omega_x) + 0.5) / sensor.omega_x - 1.0) * tx
    v = (1.0 - 2.0 * (np.arange(sensor.omega_y) + 0.5) / sensor.omega_y) * ty
    vv, uu = np.meshgrid(v, u, indexing="ij")
    d = frame.forward + uu.reshape(-1, 1) * frame.right + vv.reshape(-1, 1) * frame.up
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def capture(mesh: SceneMesh, view: View, sensor: SensorModel, seed: int) -> np.ndarray:
    """Measured points (k, 3) for one exposure, ordered by pixel index.

    Hits beyond ``max_range`` are dropped; range noise ``N(0, sigma^2)`` is
    drawn per hit in pixel order from ``numpy.random.default_rng(seed)``.
    """
    frame = pose_from_view(view)
    dirs = pixel_directions(frame, sensor)
    t = mesh.raycast(frame.origin, dirs, sensor.max_range)
    hit = np.isfinite(t)
    t = t[hit]
    if sensor.sigma > 0 and len(t):
        t = t + np.random.default_rng(seed).normal(0.0, sensor.sigma, size=len(t))
    return frame.origin + t[:, None] * dirs[hit]


from .mesh_io import MeshParseError, load_mesh  # noqa: E402,F401  (re-exported)
