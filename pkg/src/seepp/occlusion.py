"""Point-based occlusion tests along frontier sight lines.

A frontier ``f`` is occluded from a view when stored points lie within the
resolution radius ``r`` of samples ``f + delta * ray`` taken every ``r`` from
the offset ``zeta`` up to the search distance ``psi`` (last sample is the
largest grid value not exceeding ``psi``).  The frontier itself and points
within ``epsilon`` of it never count as occluders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _grid
from .geometry import DegenerateGeometryError, View
from .point_store import PointStore

_GRID_TOL = 1e-9


@dataclass(frozen=True)
class OcclusionConfig:
    psi: float
    r: float

    def __post_init__(self):
        if not (self.psi > self.r > 0):
            raise ValueError("need psi > r > 0")


def sight_line(frontier, view_position) -> np.ndarray:
    """Unit vector from ``frontier`` towards ``view_position``."""
    d = np.asarray(view_position, dtype=np.float64) - np.asarray(frontier, dtype=np.float64)
    n = np.linalg.norm(d)
    if not n > 0:
        raise DegenerateGeometryError("view position coincides with the frontier point")
    return d / n


def delta_grid(zeta: float, psi: float, r: float) -> np.ndarray:
    """Sample distances ``zeta, zeta + r, ...`` up to and including the last one <= psi."""
    if zeta > psi:
        return np.empty(0)
    k = int(np.floor((psi - zeta) / r + _GRID_TOL))
    return zeta + r * np.arange(k + 1, dtype=np.float64)


@njit(cache=True)
def _occluders(pos, n, nxt, keys, heads, inv_h, fi, ray, zeta, psi, r, eps):
    f = pos[fi].copy()
    k = int(np.floor((psi - zeta) / r + 1e-9)) if zeta <= psi else -1
    mark = np.zeros(n, dtype=np.bool_)
    e2 = eps * eps
    out = np.empty(16, dtype=np.int64)
    m = 0
    for s in range(k + 1):
        d = zeta + r * s
        c = f + d * ray
        hits = _grid.ball(pos, n, nxt, keys, heads, inv_h, c, r)
        for j in hits:
            if j == fi or mark[j]:
                continue
            dx = pos[j, 0] - f[0]
            dy = pos[j, 1] - f[1]
            dz = pos[j, 2] - f[2]
            if dx * dx + dy * dy + dz * dz <= e2:
                continue
            mark[j] = True
            if m == out.shape[0]:
                grown = np.empty(2 * m, dtype=np.int64)
                grown[:m] = out
                out = grown
            out[m] = j
            m += 1
    return np.sort(out[:m])


@njit(cache=True)
def _clear(pos, n, nxt, keys, heads, inv_h, fi, ray, zeta, psi, r, eps):
    if zeta > psi:
        return True
    f = pos[fi]
    k = int(np.floor((psi - zeta) / r + 1e-9))
    c = np.empty(3)
    for s in range(k + 1):
        d = zeta + r * s
        c[0] = f[0] + d * ray[0]
        c[1] = f[1] + d * ray[1]
        c[2] = f[2] + d * ray[2]
        if _grid.ball_any(pos, n, nxt, keys, heads, inv_h, c, r, fi, f, eps):
            return False
    return True


@njit(cache=True)
def visible_many(pos, n, nxt, keys, heads, inv_h, fidx, vpos, zeta, psi, r, eps):
    """Occlusion-free flags for frontier ``fidx[i]`` seen from ``vpos[i]``."""
    out = np.empty(fidx.shape[0], dtype=np.bool_)
    for i in range(fidx.shape[0]):
        f = pos[fidx[i]]
        d = vpos[i] - f
        nd = np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        if nd == 0.0:
            out[i] = False
            continue
        out[i] = _clear(pos, n, nxt, keys, heads, inv_h, fidx[i], d / nd, zeta[i], psi, r, eps)
    return out


@njit(cache=True)
def offsets_many(pos, n, nxt, keys, heads, inv_h, fidx, vpos, psi, r):
    """First ``delta = r, 2r, ...`` along each observing sight line with an empty
    ``r``-ball (frontier excluded); ``psi`` when none is found."""
    out = np.empty(fidx.shape[0])
    c = np.empty(3)
    for i in range(fidx.shape[0]):
        fi = fidx[i]
        f = pos[fi]
        d = vpos[i] - f
        nd = np.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
        out[i] = psi
        if nd == 0.0:
            continue
        ray = d / nd
        k = int(np.floor(psi / r + 1e-9))
        for s in range(1, k + 1):
            delta = r * s
            c[0] = f[0] + delta * ray[0]
            c[1] = f[1] + delta * ray[1]
            c[2] = f[2] + delta * ray[2]
            if not _grid.ball_any(pos, n, nxt, keys, heads, inv_h, c, r, fi, f, 0.0):
                out[i] = delta
                break
    return out


class OcclusionDetector:
    """Occlusion queries against one point store."""

    def __init__(self, store: PointStore, config: OcclusionConfig):
        if abs(config.r - store.config.r) > 1e-12:
            raise ValueError("occlusion radius must match the store resolution radius")
        self.store = store
        self.config = config

    @property
    def epsilon(self) -> float:
        return self.store.config.epsilon

    def _ray(self, frontier_idx: int, view: View) -> np.ndarray:
        return sight_line(self.store.position(frontier_idx), view.position)

    def occluding_points(self, frontier_idx: int, view: View, zeta: float) -> np.ndarray:
        if zeta < 0:
            raise ValueError("zeta must be non-negative")
        ray = self._ray(frontier_idx, view)
        return _occluders(*self.store.grid_arrays(), int(frontier_idx), ray, float(zeta),
                          self.config.psi, self.config.r, self.epsilon)

    def is_visible(self, frontier_idx: int, view: View, zeta: float) -> bool:
        ray = self._ray(frontier_idx, view)
        return bool(_clear(*self.store.grid_arrays(), int(frontier_idx), ray, float(zeta),
                           self.config.psi, self.config.r, self.epsilon))

    def visible_many(self, frontier_idx, view_positions, zetas) -> np.ndarray:
        fidx = np.ascontiguousarray(frontier_idx, dtype=np.int64)
        if len(fidx) == 0:
            return np.empty(0, dtype=bool)
        return visible_many(*self.store.grid_arrays(), fidx,
                            np.ascontiguousarray(view_positions, dtype=np.float64).reshape(-1, 3),
                            np.ascontiguousarray(zetas, dtype=np.float64),
                            self.config.psi, self.config.r, self.epsilon)

    def compute_offset(self, frontier_idx: int, observing_view: View) -> float:
        return float(self.offsets_many([frontier_idx], [observing_view.position])[0])

    def offsets_many(self, frontier_idx, view_positions) -> np.ndarray:
        fidx = np.ascontiguousarray(frontier_idx, dtype=np.int64)
        if len(fidx) == 0:
            return np.empty(0)
        return offsets_many(*self.store.grid_arrays(), fidx,
                            np.ascontiguousarray(view_positions, dtype=np.float64).reshape(-1, 3),
                            self.config.psi, self.config.r)
