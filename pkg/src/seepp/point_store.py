"""Density-classified point storage.

Every accepted measurement is kept forever and carries one of three classes:

* ``CORE``: at least ``k_core`` other points within the resolution radius ``r``;
* ``FRONTIER``: not core, but with at least one core and one non-core point
  among its ``r``-neighbours (the point itself does not count);
* ``OUTLIER``: everything else.

The density threshold is ``k_core = ceil(rho * 4/3 * pi * r**3)``, the expected
number of points in an ``r``-ball at the desired volumetric density.  A point
never counts towards its own threshold, so an isolated measurement is always
an outlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _grid
from ._grid import CORE, FRONTIER, OUTLIER

__all__ = ["CORE", "FRONTIER", "OUTLIER", "CLASS_NAMES", "StoreConfig", "PointStore", "RejectedInputError"]

CLASS_NAMES = {int(CORE): "core", int(OUTLIER): "outlier", int(FRONTIER): "frontier"}

RECORD_DTYPE = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("cls", "u1"), ("view_id", "<u4")])


class RejectedInputError(ValueError):
    """A measurement batch contained non-finite coordinates."""


def core_threshold(rho: float, r: float) -> int:
    return max(1, math.ceil(rho * 4.0 / 3.0 * math.pi * r**3 - 1e-9))


@dataclass(frozen=True)
class StoreConfig:
    rho: float
    r: float
    epsilon: float = field(default=None)
    k_core: int = field(default=None)

    def __post_init__(self):
        if not self.rho > 0 or not self.r > 0:
            raise ValueError("rho and r must be positive")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", math.sqrt(1.0 / self.rho))
        if self.k_core is None:
            object.__setattr__(self, "k_core", core_threshold(self.rho, self.r))
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.k_core < 1:
            raise ValueError("k_core must be >= 1")


class PointStore:
    """Growable point set with an exact fixed-radius index.

    Not internally synchronised: concurrent readers are fine, writers
    (``insert_measurements``/``reclassify``) need exclusive access.
    """

    def __init__(self, config: StoreConfig, capacity: int = 1024):
        self.config = config
        self._h = config.r
        self._inv_h = 1.0 / self._h
        cap = max(16, int(capacity))
        self._pos = np.empty((cap, 3), dtype=np.float64)
        self._nxt = np.empty(cap, dtype=np.int64)
        self._cls = np.empty(cap, dtype=np.uint8)
        self._view = np.empty(cap, dtype=np.uint32)
        self._counts = np.zeros(cap, dtype=np.int64)
        self._n = 0
        self._cells = 0
        self._keys = np.full(_pow2(4 * cap), _grid.EMPTY, dtype=np.int64)
        self._heads = np.empty_like(self._keys)

    # -- basic accessors -------------------------------------------------
    def __len__(self) -> int:
        return self._n

    @property
    def positions(self) -> np.ndarray:
        """Read-only view of the stored coordinates, shape (n, 3)."""
        v = self._pos[: self._n]
        v.flags.writeable = False
        return v

    @property
    def classes(self) -> np.ndarray:
        v = self._cls[: self._n]
        v.flags.writeable = False
        return v

    @property
    def view_ids(self) -> np.ndarray:
        v = self._view[: self._n]
        v.flags.writeable = False
        return v

    @property
    def neighbor_counts(self) -> np.ndarray:
        """Self-excluded number of stored points within ``r`` of each point."""
        v = self._counts[: self._n]
        v.flags.writeable = False
        return v

    def grid_arrays(self):
        """Arguments prefix shared by the numba kernels in ``seepp._grid``."""
        return self._pos, self._n, self._nxt, self._keys, self._heads, self._inv_h

    # -- capacity --------------------------------------------------------
    def _reserve(self, extra: int):
        need = self._n + extra
        cap = self._pos.shape[0]
        if need > cap:
            new_cap = max(need, 2 * cap)
            for name in ("_pos", "_nxt", "_cls", "_view", "_counts"):
                old = getattr(self, name)
                grown = np.zeros((new_cap,) + old.shape[1:], dtype=old.dtype)
                grown[: self._n] = old[: self._n]
                setattr(self, name, grown)
        if 2 * (self._cells + extra) > self._keys.shape[0]:
            size = _pow2(4 * (self._cells + extra))
            self._keys = np.full(size, _grid.EMPTY, dtype=np.int64)
            self._heads = np.empty(size, dtype=np.int64)
            self._cells = _grid.rebuild(self._pos, self._n, self._nxt, self._keys, self._heads, self._inv_h)

    # -- operations ------------------------------------------------------
    def insert_measurements(self, points, view_id: int) -> np.ndarray:
        """Add points that have no stored point within ``epsilon``.

        Points are processed in the given order, so an accepted point vetoes
        later points of the same batch.  Returns the store indices of the
        accepted points (contiguous, in batch order).  New points start as
        outliers; call :meth:`reclassify` with the returned indices.
        """
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
        if not np.all(np.isfinite(pts)):
            raise RejectedInputError("measurement batch contains non-finite coordinates")
        if len(pts) == 0:
            return np.empty(0, dtype=np.int64)
        self._reserve(len(pts))
        n_old = self._n
        _, n, opened = _grid.insert_filtered(
            self._pos, self._n, self._nxt, self._keys, self._heads, self._inv_h, pts, self.config.epsilon
        )
        self._n = int(n)
        self._cells += int(opened)
        self._cls[n_old:n] = OUTLIER
        self._view[n_old:n] = view_id
        _grid.add_neighbor_counts(
            self._pos, self._n, self._nxt, self._keys, self._heads, self._inv_h, n_old, self.config.r, self._counts
        )
        return np.arange(n_old, n, dtype=np.int64)

    def radius_neighbors(self, center, radius: float) -> np.ndarray:
        """Sorted indices of stored points with ``||q - center|| <= radius``."""
        if not radius > 0:
            raise ValueError("radius must be positive")
        c = np.asarray(center, dtype=np.float64).reshape(3)
        if self._n == 0:
            return np.empty(0, dtype=np.int64)
        return np.sort(_grid.ball(self._pos, self._n, self._nxt, self._keys, self._heads, self._inv_h, c, float(radius)))

    def reclassify(self, affected) -> list[tuple[int, int, int]]:
        """Update classes around ``affected``; returns ``(index, old, new)`` for each change.

        ``affected`` must include every point inserted since the previous call.
        The result is identical to classifying the whole store from scratch.
        """
        idx, old, new = self.reclassify_arrays(affected)
        return list(zip(idx.tolist(), old.tolist(), new.tolist()))

    def reclassify_arrays(self, affected):
        a = np.asarray(affected, dtype=np.int64).reshape(-1)
        if len(a) and (a.min() < 0 or a.max() >= self._n):
            raise IndexError("affected index out of range")
        return _grid.reclassify(
            self._pos, self._n, self._nxt, self._keys, self._heads, self._inv_h,
            a, self.config.r, self.config.k_core, self._counts, self._cls,
        )

    def frontier_set(self) -> np.ndarray:
        return np.flatnonzero(self._cls[: self._n] == FRONTIER)

    def core_set(self) -> np.ndarray:
        return np.flatnonzero(self._cls[: self._n] == CORE)

    def position(self, i: int) -> np.ndarray:
        return self._pos[i].copy()

    # -- fixtures --------------------------------------------------------
    def dump(self, path):
        rec = np.empty(self._n, dtype=RECORD_DTYPE)
        rec["x"], rec["y"], rec["z"] = self._pos[: self._n].T
        rec["cls"] = self._cls[: self._n]
        rec["view_id"] = self._view[: self._n]
        with open(path, "wb") as fh:
            fh.write(rec.tobytes())

    @classmethod
    def load(cls, path, config: StoreConfig) -> "PointStore":
        """Rebuild a store from :meth:`dump` output.

        Points are restored verbatim (no epsilon filtering), classes as stored.
        """
        raw = np.fromfile(path, dtype=RECORD_DTYPE)
        store = cls(config, capacity=max(16, len(raw)))
        n = len(raw)
        store._reserve(n)
        store._pos[:n] = np.column_stack([raw["x"], raw["y"], raw["z"]])
        store._cls[:n] = raw["cls"]
        store._view[:n] = raw["view_id"]
        store._n = n
        store._cells = _grid.rebuild(store._pos, n, store._nxt, store._keys, store._heads, store._inv_h)
        store._counts[:n] = 0
        _grid.add_neighbor_counts(store._pos, n, store._nxt, store._keys, store._heads, store._inv_h, 0, config.r, store._counts)
        return store


def _pow2(x: int) -> int:
    return 1 << max(4, int(x - 1).bit_length())
