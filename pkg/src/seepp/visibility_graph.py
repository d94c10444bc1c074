"""Frontier visibility graph and next-best-view selection.

Vertices pair a frontier point with its current view proposal.  An edge
``(j, k)`` records that the view of ``j`` is predicted to measure the frontier
of ``k``.  Only the ``tau`` proposals nearest the sensor have their outgoing
edges refreshed per update, which bounds the cost of a planning step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import View
from .occlusion import OcclusionDetector


@dataclass
class FrontierVertex:
    frontier_idx: int
    view: View
    vertex_id: int


@dataclass
class EdgeDelta:
    removed: set = field(default_factory=set)
    added: set = field(default_factory=set)


class VisibilityPredicate:
    """Can a view measure a frontier?

    Three tests, all required: the frontier lies inside the view's angular
    frustum (half-angle ``min(theta_x, theta_y) / 2``), its range is within
    ``[0.5 d, 1.5 d]``, and the sight line is occlusion-free.
    """

    def __init__(self, detector: OcclusionDetector, zeta, half_angle: float, d: float):
        self.detector = detector
        self.zeta = zeta  # frontier index -> offset
        self.cos_half = math.cos(half_angle)
        self.d = d

    def geometric(self, view_pos, view_dir, frontier_pos) -> np.ndarray:
        delta = frontier_pos - view_pos
        rng = np.linalg.norm(delta, axis=1)
        ok = (rng >= 0.5 * self.d) & (rng <= 1.5 * self.d)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.einsum("ij,ij->i", delta, view_dir) / rng
        return ok & (cos >= self.cos_half)

    def __call__(self, view_pos, view_dir, fidx) -> np.ndarray:
        fidx = np.asarray(fidx, dtype=np.int64)
        view_pos = np.asarray(view_pos, dtype=np.float64).reshape(-1, 3)
        view_dir = np.asarray(view_dir, dtype=np.float64).reshape(-1, 3)
        out = self.geometric(view_pos, view_dir, self.detector.store.positions[fidx])
        todo = np.flatnonzero(out)
        if len(todo):
            zetas = np.array([self.zeta(int(i)) for i in fidx[todo]])
            out[todo] = self.detector.visible_many(fidx[todo], view_pos[todo], zetas)
        return out


class VisibilityGraph:
    """Directed graph over frontier/view pairs; single writer."""

    def __init__(self, tau: int, predicate):
        if tau < 1:
            raise ValueError("tau must be >= 1")
        self.tau = int(tau)
        self.predicate = predicate
        self.vertices: dict[int, FrontierVertex] = {}
        self.by_frontier: dict[int, int] = {}
        self.out: dict[int, set] = {}
        self.inn: dict[int, set] = {}
        self._next_id = 0

    def __len__(self):
        return len(self.vertices)

    @property
    def edges(self) -> set:
        return {(a, b) for a, bs in self.out.items() for b in bs}

    def outdegree(self, vid: int) -> int:
        return len(self.out[vid])

    def _drop_edges(self, vid: int):
        for w in self.out[vid]:
            self.inn[w].discard(vid)
        for w in self.inn[vid]:
            self.out[w].discard(vid)
        self.out[vid] = set()
        self.inn[vid] = set()

    def sync_vertices(self, live_frontiers, proposals) -> tuple[set, set]:
        """Make the vertex set mirror ``live_frontiers``.

        Vertices of vanished frontiers go (with their edges); new frontiers get
        fresh ids.  A vertex whose proposal changed keeps its id but loses all
        incident edges until the next connectivity update.
        """
        live = {int(f) for f in live_frontiers}
        removed = set()
        for f in sorted(set(self.by_frontier) - live):
            vid = self.by_frontier.pop(f)
            self._drop_edges(vid)
            del self.out[vid], self.inn[vid], self.vertices[vid]
            removed.add(vid)
        added = set()
        for f in sorted(live):
            view = proposals[f]
            vid = self.by_frontier.get(f)
            if vid is None:
                vid = self._next_id
                self._next_id += 1
                self.by_frontier[f] = vid
                self.vertices[vid] = FrontierVertex(f, view, vid)
                self.out[vid] = set()
                self.inn[vid] = set()
                added.add(vid)
            elif self.vertices[vid].view != view:
                self.vertices[vid].view = view
                self._drop_edges(vid)
        return added, removed

    def _arrays(self):
        vids = np.array(sorted(self.vertices), dtype=np.int64)
        pos = np.array([self.vertices[v].view.position for v in vids]).reshape(-1, 3)
        return vids, pos

    @staticmethod
    def _nearest(vids, pos, point, k, exclude=None):
        dist = np.linalg.norm(pos - point, axis=1)
        if exclude is not None:
            dist[vids == exclude] = np.inf
            k = min(k, len(vids) - 1)
        k = min(k, len(vids))
        if k <= 0:
            return vids[:0]
        if k < len(vids):
            kth = np.partition(dist, k - 1)[k - 1]
            cand = np.flatnonzero(dist <= kth)
        else:
            cand = np.flatnonzero(np.isfinite(dist))
        order = cand[np.lexsort((vids[cand], dist[cand]))]
        return vids[order[:k]]

    def nearest_vertices(self, point, k=None) -> np.ndarray:
        """Vertex ids of the ``k`` (default ``tau``) views closest to ``point``; ties by id."""
        if not self.vertices:
            return np.empty(0, dtype=np.int64)
        vids, pos = self._arrays()
        return self._nearest(vids, pos, np.asarray(point, dtype=np.float64), self.tau if k is None else k)

    def update_connectivity(self, sensor_position) -> EdgeDelta:
        delta = EdgeDelta()
        if not self.vertices:
            return delta
        vids, pos = self._arrays()
        updated = self._nearest(vids, pos, np.asarray(sensor_position, dtype=np.float64), self.tau)
        src, dst = [], []
        for u in updated:
            u = int(u)
            for w in self.out[u]:
                self.inn[w].discard(u)
                delta.removed.add((u, w))
            self.out[u] = set()
            targets = self._nearest(vids, pos, self.vertices[u].view.position, self.tau, exclude=u)
            src.extend([u] * len(targets))
            dst.extend(int(t) for t in targets)
        if src:
            vp = np.array([self.vertices[u].view.position for u in src])
            vo = np.array([self.vertices[u].view.orientation for u in src])
            fi = np.array([self.vertices[w].frontier_idx for w in dst], dtype=np.int64)
            ok = self.predicate(vp, vo, fi)
            for u, w, good in zip(src, dst, ok):
                if good:
                    self.out[u].add(w)
                    self.inn[w].add(u)
                    delta.added.add((u, w))
        delta.removed -= delta.added
        return delta

    def select_nbv(self, current_view: View) -> FrontierVertex | None:
        """Vertex whose view to capture next; ``None`` once the graph is empty."""
        if not self.vertices:
            return None
        here = current_view.position
        vids, pos = self._arrays()
        m_c = int(self._nearest(vids, pos, here, 1)[0])
        deg_c = len(self.out[m_c])
        best, best_key = m_c, None
        for m in sorted(self.inn[m_c]):
            deg = len(self.out[m])
            if deg <= deg_c:
                continue
            dist = float(np.linalg.norm(self.vertices[m].view.position - here))
            ratio = math.inf if dist == 0.0 else deg / dist
            key = (ratio, deg, -m)
            if best_key is None or key > best_key:
                best, best_key = m, key
        return self.vertices[best]

    def export_edges(self, fh):
        for a, b in sorted(self.edges):
            fh.write(f"{a} {b}\n")
