"""Observation loop for the reactive (``see``) and proactive (``see_plus_plus``) planners.

Both modes share measurement ingestion, frontier bookkeeping, initial view
proposals and the reactive adjustment rule for targets that a capture failed
to resolve.  ``see`` then moves to the closest proposal.  ``see_plus_plus``
first re-proposes occluded views near the sensor and selects through the
frontier visibility graph.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import View, any_perpendicular, rotate_about_axis, unit
from .occlusion import OcclusionConfig, OcclusionDetector
from .point_store import PointStore, StoreConfig
from .sensor_sim import SensorModel
from .view_proposal import ProposalConfig, ViewProposer
from .visibility_graph import VisibilityGraph, VisibilityPredicate

MODES = ("see", "see_plus_plus")


def view_distance(sensor: SensorModel, rho: float) -> float:
    """Range at which the frustum's measurement density equals ``rho``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    tx = math.tan(math.radians(sensor.theta_x) / 2.0)
    ty = math.tan(math.radians(sensor.theta_y) / 2.0)
    return (3.0 * sensor.omega_x * sensor.omega_y / (4.0 * rho * tx * ty)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class PlannerConfig:
    mode: str
    store: StoreConfig
    occlusion: OcclusionConfig
    proposal: ProposalConfig
    tau: int = 100
    max_views: int = 200
    adjust_step: float = 30.0  # degrees
    fov_half_angle: float = math.radians(42.5) / 2.0  # radians

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.max_views < 1:
            raise ValueError("max_views must be >= 1")
        if not 0 < self.adjust_step <= 180:
            raise ValueError("adjust_step must lie in (0, 180] degrees")

    @property
    def max_attempts(self) -> int:
        return max(1, int(round(360.0 / self.adjust_step)))


@dataclass
class PlannerState:
    current_view: View
    view_history: list = field(default_factory=list)
    pending_target: int | None = None
    adjustment_count: dict = field(default_factory=dict)


@dataclass
class StepInfo:
    """Bookkeeping for one planning step (for logs and metrics)."""

    accepted: int
    frontiers: int
    resolved: int
    reproposed: int
    plan_time: float
    adjusted: bool


class Planner:
    def __init__(self, config: PlannerConfig, seed_view: View, capacity: int = 1 << 16):
        self.config = config
        self.store = PointStore(config.store, capacity)
        self.detector = OcclusionDetector(self.store, config.occlusion)
        self.state = PlannerState(seed_view, [seed_view])
        self.proposer = ViewProposer(self.store, config.proposal, lambda vid: self.state.view_history[vid])
        predicate = VisibilityPredicate(self.detector, self.zeta, config.fov_half_angle, config.proposal.d)
        self.graph = VisibilityGraph(config.tau, predicate)
        self.proposals: dict[int, View] = {}
        self.offsets: dict[int, float] = {}
        self.exhausted: set[int] = set()
        self.axes: dict[int, np.ndarray] = {}
        self.complete = False
        self.log: list[StepInfo] = []
        self._frontiers = set()

    # -- accessors -------------------------------------------------------
    @property
    def d(self) -> float:
        return self.config.proposal.d

    @property
    def current_view(self) -> View:
        return self.state.current_view

    @property
    def view_history(self) -> list:
        return self.state.view_history

    def zeta(self, frontier_idx: int) -> float:
        return self.offsets[frontier_idx]

    def candidates(self) -> list[int]:
        """Live frontiers that have not been abandoned, ascending."""
        return sorted(self._frontiers - self.exhausted)

    # -- main loop ---------------------------------------------------------
    def step(self, measurements) -> View | None:
        """Ingest a capture from the current view; return the next view or ``None`` when done."""
        if self.complete:
            return None
        t0 = time.perf_counter()
        vid = len(self.view_history) - 1
        new = self.store.insert_measurements(measurements, vid)
        self.store.reclassify_arrays(new)
        before = self._frontiers
        self._refresh_frontiers()
        resolved = len(before - self._frontiers)

        adjusted = False
        nxt = None
        room = len(self.view_history) < self.config.max_views
        target = self.state.pending_target
        if target is not None and target in self._frontiers and target not in self.exhausted:
            n = self.state.adjustment_count.get(target, 0) + 1
            self.state.adjustment_count[target] = n
            if n >= self.config.max_attempts:
                self.exhausted.add(target)
            else:
                self.proposals[target] = self.reactive_adjustment(target, self.current_view)
                adjusted = True
                if self.config.mode == "see" and room:
                    nxt = self.proposals[target]

        reproposed = 0
        if nxt is None and room:
            if self.config.mode == "see":
                target = self._closest_proposal()
                if target is not None:
                    nxt = self.proposals[target]
            else:
                reproposed = self._reject_occluded()
                live = self.candidates()
                self.graph.sync_vertices(live, self.proposals)
                self.graph.update_connectivity(self.current_view.position)
                vertex = self.graph.select_nbv(self.current_view)
                if vertex is not None:
                    target, nxt = vertex.frontier_idx, vertex.view

        self.log.append(StepInfo(len(new), len(self._frontiers), resolved, reproposed,
                                 time.perf_counter() - t0, adjusted))
        if nxt is None:
            self.complete = True
            self.state.pending_target = None
            return None
        self.state.pending_target = target
        self.state.current_view = nxt
        self.view_history.append(nxt)
        return nxt

    def _refresh_frontiers(self):
        live = set(self.store.frontier_set().tolist())
        gone = self._frontiers - live
        for f in gone:
            self.proposals.pop(f, None)
            self.offsets.pop(f, None)
            self.axes.pop(f, None)
            self.state.adjustment_count.pop(f, None)
        self.exhausted -= gone
        fresh = np.array(sorted(live - self._frontiers), dtype=np.int64)
        if len(fresh):
            views = self.proposer.propose_initial_views(fresh)
            obs = np.array([self.view_history[v].position for v in self.store.view_ids[fresh]])
            zetas = self.detector.offsets_many(fresh, obs)
            for f, v, z in zip(fresh.tolist(), views, zetas.tolist()):
                self.proposals[f] = v
                self.offsets[f] = z
        self._frontiers = live

    def _closest_proposal(self) -> int | None:
        live = self.candidates()
        if not live:
            return None
        pos = np.array([self.proposals[f].position for f in live])
        dist = np.linalg.norm(pos - self.current_view.position, axis=1)
        return live[int(np.argmin(dist))]  # first minimum -> lowest index on ties

    def _reject_occluded(self) -> int:
        """Re-propose occluded views among the tau proposals nearest the sensor."""
        live = self.candidates()
        if not live:
            return 0
        pos = np.array([self.proposals[f].position for f in live])
        dist = np.linalg.norm(pos - self.current_view.position, axis=1)
        k = min(self.config.tau, len(live))
        near = np.lexsort((np.asarray(live), dist))[:k]
        fidx = np.asarray(live, dtype=np.int64)[near]
        zetas = np.array([self.offsets[f] for f in fidx])
        clear = self.detector.visible_many(fidx, pos[near], zetas)
        count = 0
        for f, ok in zip(fidx.tolist(), clear):
            if ok:
                continue
            view = self.proposer.propose_unoccluded_view(f, self.offsets[f], current=self.proposals[f])
            if view != self.proposals[f]:
                self.proposals[f] = view
                count += 1
        return count

    # -- reactive fallback ---------------------------------------------------
    def reactive_adjustment(self, target: int, failed_view: View) -> View:
        """Rotate the failed view about ``target`` by ``adjust_step`` keeping range ``d``.

        The rotation axis is the target normal crossed with the failed sight
        line; it is fixed at the first adjustment so successive attempts sweep
        one great circle.
        """
        f = self.store.positions[target]
        sight = unit(failed_view.position - f)
        axis = self.axes.get(target)
        if axis is None:
            a = np.cross(self.proposer.estimate_normal(target), sight)
            axis = unit(a) if np.linalg.norm(a) > 1e-9 else any_perpendicular(sight)
            self.axes[target] = axis
        s = unit(rotate_about_axis(sight, axis, math.radians(self.config.adjust_step)))
        return View(f + self.d * s, -s)
