"""View proposals for frontier points.

Initial proposals sit at the view distance ``d`` along the estimated surface
normal.  Occluded frontiers get a replacement from the spherical minimax
construction: points around the frontier are projected onto a unit sphere,
the smallest cap containing them is found, and the view is placed along the
antipole of the cap centre (the direction farthest from every projected
point).

Orientation convention: ``View.orientation`` points from the view towards its
target, so the *observing orientation* ``v_o`` of a frontier points into the
surface and the known-clear sight line is ``-v_o``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.spatial import ConvexHull, QhullError

from . import _grid
from .geometry import View, any_perpendicular, unit
from .miniball import smallest_enclosing_ball
from .point_store import PointStore

# e* below this certifies that no sub-hemispherical cap exists
SUB_HEMISPHERE_EPS = 1e-6
TIE_DEG = 0.1


@dataclass(frozen=True)
class ProposalConfig:
    d: float
    psi: float
    normal_k: int = 3  # fewest points, the frontier included, for a plane fit
    # angular bin used to thin projected directions before the cap solve
    projection_resolution: float = 1e-9

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("view distance d must be positive")
        if not self.psi > 0:
            raise ValueError("psi must be positive")
        if self.normal_k < 3:
            raise ValueError("plane fitting needs normal_k >= 3")


@dataclass(frozen=True)
class CapSolution:
    """Smallest spherical cap containing a direction set.

    ``normal``/``e`` are the plane parameters of whichever program solved the
    instance; ``minimax_point`` is the cap centre and ``maximin_point`` its
    antipole.  ``regime`` is ``"sub"``, ``"super"`` or ``"empty"``.
    """

    normal: np.ndarray
    e: float
    minimax_point: np.ndarray
    maximin_point: np.ndarray
    regime: str

    @property
    def clearance(self) -> float:
        """Smallest angle (rad) between the maximin point and the cap's points."""
        if self.regime == "sub":
            return float(np.pi - np.arccos(np.clip(self.e, -1, 1)))
        if self.regime == "super":
            return float(np.arccos(np.clip(self.e, -1, 1)))
        return float(np.pi)


# -- minimax cap ----------------------------------------------------------

def _pick(candidates: np.ndarray, prefer: np.ndarray) -> np.ndarray:
    """Deterministic choice: largest dot product with ``prefer``, then lexicographic."""
    score = candidates @ prefer
    best = np.flatnonzero(score >= score.max() - 1e-12)
    if len(best) > 1:
        rows = candidates[best]
        best = best[np.lexsort(rows.T[::-1])]
    return candidates[best[0]]


def _solve_sub(Q: np.ndarray):
    """Largest e with e <= n.q for all q (|n| = 1), via the smallest enclosing ball.

    For directions inside an open hemisphere the enclosing ball's centre
    points at the centre of the smallest containing cap.
    """
    c, _ = smallest_enclosing_ball(Q)
    nc = float(np.linalg.norm(c))
    if nc < 1e-12:
        return None, 0.0
    p = c / nc
    return p, float((Q @ p).min())


def _solve_super(Q: np.ndarray, prefer_minimax: np.ndarray):
    """Smallest e with e >= n.q for all q (|n| = 1) when the origin is in conv(Q).

    Every facet of the convex hull of the directions bounds an empty cap; the
    facet plane closest to the origin bounds the largest one.
    """
    _, s, vt = np.linalg.svd(Q, full_matrices=False)
    rank = int(np.sum(s > 1e-9 * s[0]))
    if rank == 1:
        axis = vt[0]
        v = -prefer_minimax - (-prefer_minimax @ axis) * axis
        m = unit(v) if np.linalg.norm(v) > 1e-9 else any_perpendicular(axis)
        return m, 0.0
    if rank == 2:
        u = vt[2]
        return _pick(np.array([u, -u]), -prefer_minimax), 0.0
    try:
        hull = ConvexHull(Q)
    except QhullError:
        hull = ConvexHull(Q, qhull_options="QJ")
    normals = hull.equations[:, :3]
    offsets = np.clip(-hull.equations[:, 3], -1.0, 1.0)
    best = float(np.arccos(offsets.min()))
    near = normals[offsets <= np.cos(max(0.0, best - np.radians(TIE_DEG)))]
    m = _pick(near / np.linalg.norm(near, axis=1, keepdims=True), -prefer_minimax)
    return m, max(0.0, float((Q @ m).max()))


def solve_minimax_cap(Q, init_orientation) -> CapSolution:
    """Centre of the smallest spherical cap containing the unit vectors ``Q``.

    ``init_orientation`` is the observing view orientation ``v_o``; it seeds
    the sub-hemisphere program (normal ``v_o``) and the super-hemisphere one
    (normal ``-v_o``) and breaks ties between equally good solutions.
    """
    v_o = unit(init_orientation)
    Q = np.asarray(Q, dtype=np.float64).reshape(-1, 3)
    if len(Q) == 0:
        return CapSolution(v_o.copy(), 1.0, v_o.copy(), -v_o, "empty")
    Q = Q / np.linalg.norm(Q, axis=1, keepdims=True)
    p, e = _solve_sub(Q)
    if p is not None and e > SUB_HEMISPHERE_EPS:
        return CapSolution(p, float(min(e, 1.0)), p, -p, "sub")
    m, e = _solve_super(Q, v_o)
    return CapSolution(m, float(min(e, 1.0)), -m, m, "super")


def min_separation(direction, Q) -> float:
    """Smallest angle (rad) between ``direction`` and any row of ``Q``."""
    Q = np.asarray(Q, dtype=np.float64).reshape(-1, 3)
    if len(Q) == 0:
        return float(np.pi)
    cos = np.clip(Q @ np.asarray(direction, dtype=np.float64), -1.0, 1.0)
    return float(np.arccos(cos.max()))


# -- normals --------------------------------------------------------------

@njit(cache=True)
def _normals(pos, n, nxt, keys, heads, inv_h, fidx, sight, r, min_nb):
    out = np.empty((fidx.shape[0], 3))
    fitted = np.zeros(fidx.shape[0], dtype=np.bool_)
    for i in range(fidx.shape[0]):
        f = pos[fidx[i]]
        nb = _grid.ball(pos, n, nxt, keys, heads, inv_h, f, r)
        s = sight[i]
        if nb.shape[0] < min_nb:
            out[i] = s
            continue
        mean = np.zeros(3)
        for j in nb:
            mean += pos[j]
        mean /= nb.shape[0]
        cov = np.zeros((3, 3))
        for j in nb:
            d = pos[j] - mean
            cov += np.outer(d, d)
        w, v = np.linalg.eigh(cov)
        nrm = v[:, 0].copy()
        if nrm @ s < 0:
            nrm = -nrm
        out[i] = nrm
        fitted[i] = True
    return out, fitted


# -- proposer ------------------------------------------------------------

class ViewProposer:
    """Builds initial and occlusion-avoiding views for frontiers of one store.

    ``observing_view`` maps a point's ``view_id`` to the :class:`View` that
    first measured it.
    """

    def __init__(self, store: PointStore, config: ProposalConfig, observing_view):
        self.store = store
        self.config = config
        self.observing_view = observing_view

    def observing_sight_line(self, frontier_idx: int) -> np.ndarray:
        f = self.store.positions[frontier_idx]
        v = self.observing_view(int(self.store.view_ids[frontier_idx]))
        return unit(v.position - f)

    def estimate_normal(self, frontier_idx: int) -> np.ndarray:
        return self.estimate_normals([frontier_idx])[0]

    def estimate_normals(self, frontier_idx) -> np.ndarray:
        fidx = np.ascontiguousarray(frontier_idx, dtype=np.int64)
        if len(fidx) == 0:
            return np.empty((0, 3))
        sight = np.array([self.observing_sight_line(i) for i in fidx]).reshape(-1, 3)
        normals, _ = _normals(*self.store.grid_arrays(), fidx, sight, self.store.config.r, self.config.normal_k)
        return normals

    def propose_initial_view(self, frontier_idx: int, normal=None) -> View:
        n = self.estimate_normal(frontier_idx) if normal is None else unit(normal)
        f = self.store.positions[frontier_idx]
        return View(f + self.config.d * n, -n)

    def propose_initial_views(self, frontier_idx) -> list[View]:
        fidx = np.asarray(frontier_idx, dtype=np.int64)
        normals = self.estimate_normals(fidx)
        pos = self.store.positions
        return [View(pos[i] + self.config.d * n, -n) for i, n in zip(fidx, normals)]

    def project_to_sphere(self, frontier_idx: int, center) -> np.ndarray:
        """Directions from ``center`` to the stored points within ``psi`` of the frontier."""
        c = np.asarray(center, dtype=np.float64)
        f = self.store.positions[frontier_idx]
        nb = _grid.ball(*self.store.grid_arrays(), np.ascontiguousarray(f), self.config.psi)
        nb = nb[nb != frontier_idx]
        if len(nb) == 0:
            return np.empty((0, 3))
        d = self.store.positions[np.sort(nb)] - c
        dist = np.linalg.norm(d, axis=1)
        keep = dist > self.store.config.epsilon
        Q = d[keep] / dist[keep, None]
        return dedupe_directions(Q, self.config.projection_resolution)

    def projection_center(self, frontier_idx: int, zeta: float) -> np.ndarray:
        return self.store.positions[frontier_idx] + zeta * self.observing_sight_line(frontier_idx)

    def propose_unoccluded_view(self, frontier_idx: int, zeta: float, current: View | None = None) -> View:
        """View along the maximin direction, looking back at the frontier.

        The projection centre is offset by ``zeta`` along the observing sight
        line.  With no projected points the current proposal is kept (or,
        without one, the observing sight line is reused).
        """
        f = self.store.positions[frontier_idx]
        v_o = -self.observing_sight_line(frontier_idx)
        Q = self.project_to_sphere(frontier_idx, self.projection_center(frontier_idx, zeta))
        if len(Q) == 0:
            if current is not None:
                return current
            return View(f - self.config.d * v_o, v_o)
        cap = solve_minimax_cap(Q, v_o)
        return View(f + self.config.d * cap.maximin_point, cap.minimax_point)


def dedupe_directions(Q: np.ndarray, resolution: float) -> np.ndarray:
    """Keep the first direction of every occupied ``resolution``-sized cube bin."""
    if len(Q) < 2:
        return Q
    bins = np.floor(Q / resolution).astype(np.int64)
    _, first = np.unique(bins, axis=0, return_index=True)
    return Q[np.sort(first)]
