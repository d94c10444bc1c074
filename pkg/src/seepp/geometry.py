"""Small vector helpers and the ``View`` pose type shared across modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateGeometryError(ValueError):
    """Raised when a construction needs two distinct points and gets one."""


def as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite coordinate in {a!r}")
    return a


def unit(v, tol: float = 1e-15) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n <= tol:
        raise DegenerateGeometryError("cannot normalise a zero-length vector")
    return v / n


def angle_between(a, b) -> float:
    """Angle in radians between two vectors (atan2 form, stable near 0 and pi)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b)))


def any_perpendicular(v) -> np.ndarray:
    """A deterministic unit vector orthogonal to ``v``."""
    v = unit(v)
    axis = np.eye(3)[int(np.argmin(np.abs(v)))]
    return unit(np.cross(v, axis))


def rotate_about_axis(v, axis, angle: float) -> np.ndarray:
    """Rodrigues rotation of ``v`` by ``angle`` radians about unit ``axis``."""
    k = unit(axis)
    v = np.asarray(v, dtype=np.float64)
    c, s = np.cos(angle), np.sin(angle)
    return v * c + np.cross(k, v) * s + k * np.dot(k, v) * (1.0 - c)


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors on the sphere (golden-angle spiral)."""
    i = np.arange(n, dtype=np.float64) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


@dataclass(frozen=True)
class View:
    """Sensor placement: a position and a unit viewing direction."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        p = as_point(self.position)
        o = np.asarray(self.orientation, dtype=np.float64).reshape(3)
        n = np.linalg.norm(o)
        if not np.isfinite(n) or abs(n - 1.0) > 1e-9:
            if n > 0 and np.isfinite(n) and abs(n - 1.0) < 1e-6:
                o = o / n
            else:
                raise ValueError(f"view orientation must be unit length, got norm {n}")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", o)

    @classmethod
    def looking_at(cls, position, target) -> "View":
        position = as_point(position)
        return cls(position, unit(as_point(target) - position))

    def __eq__(self, other):
        if not isinstance(other, View):
            return NotImplemented
        return bool(
            np.array_equal(self.position, other.position)
            and np.array_equal(self.orientation, other.orientation)
        )

    def __hash__(self):
        return hash((self.position.tobytes(), self.orientation.tobytes()))
