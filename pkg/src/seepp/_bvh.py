"""Bounding volume hierarchy over triangles and ray traversal (numba)."""

import numpy as np
from numba import njit

LEAF_SIZE = 4


@njit(cache=True)
def build(tri):
    """Median-split BVH.  Returns (bmin, bmax, left, start, count, order).

    Inner nodes have ``count == 0`` and children ``left`` / ``left + 1``;
    leaves cover ``order[start:start + count]``.
    """
    m = tri.shape[0]
    cent = (tri[:, 0] + tri[:, 1] + tri[:, 2]) / 3.0
    order = np.arange(m)
    cap = max(1, 2 * m)
    bmin = np.empty((cap, 3))
    bmax = np.empty((cap, 3))
    left = np.full(cap, -1, dtype=np.int64)
    start = np.zeros(cap, dtype=np.int64)
    count = np.zeros(cap, dtype=np.int64)
    stack = np.empty((128, 3), dtype=np.int64)  # node, lo, hi
    sp = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = m
    sp = 1
    used = 1
    while sp > 0:
        sp -= 1
        node = stack[sp, 0]
        lo = stack[sp, 1]
        hi = stack[sp, 2]
        for a in range(3):
            bmin[node, a] = np.inf
            bmax[node, a] = -np.inf
        for k in range(lo, hi):
            t = order[k]
            for v in range(3):
                for a in range(3):
                    x = tri[t, v, a]
                    if x < bmin[node, a]:
                        bmin[node, a] = x
                    if x > bmax[node, a]:
                        bmax[node, a] = x
        if hi - lo <= LEAF_SIZE:
            start[node] = lo
            count[node] = hi - lo
            continue
        cmin = np.full(3, np.inf)
        cmax = np.full(3, -np.inf)
        for k in range(lo, hi):
            c = cent[order[k]]
            for a in range(3):
                cmin[a] = min(cmin[a], c[a])
                cmax[a] = max(cmax[a], c[a])
        axis = int(np.argmax(cmax - cmin))
        seg = order[lo:hi].copy()
        srt = np.argsort(cent[seg, axis], kind="mergesort")
        order[lo:hi] = seg[srt]
        mid = (lo + hi) // 2
        left[node] = used
        count[node] = 0
        stack[sp, 0] = used
        stack[sp, 1] = lo
        stack[sp, 2] = mid
        stack[sp + 1, 0] = used + 1
        stack[sp + 1, 1] = mid
        stack[sp + 1, 2] = hi
        sp += 2
        used += 2
    return bmin[:used], bmax[:used], left[:used], start[:used], count[:used], order


@njit(cache=True, inline="always")
def _slab(o, inv, lo, hi, tmax):
    t0 = 0.0
    t1 = tmax
    for a in range(3):
        ta = (lo[a] - o[a]) * inv[a]
        tb = (hi[a] - o[a]) * inv[a]
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


@njit(cache=True)
def cast(tri, bmin, bmax, left, start, count, order, origin, dirs, tmax):
    """Nearest hit distance per ray (``inf`` when nothing within ``tmax``)."""
    nr = dirs.shape[0]
    out = np.full(nr, np.inf)
    stack = np.empty(128, dtype=np.int64)
    inv = np.empty(3)
    for i in range(nr):
        d = dirs[i]
        for a in range(3):
            inv[a] = 1.0 / d[a] if d[a] != 0.0 else np.inf
        best = tmax
        hit = False
        sp = 0
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if not _slab(origin, inv, bmin[node], bmax[node], best):
                continue
            if count[node] == 0:
                stack[sp] = left[node]
                stack[sp + 1] = left[node] + 1
                sp += 2
                continue
            for k in range(start[node], start[node] + count[node]):
                t = order[k]
                v0 = tri[t, 0]
                e1x = tri[t, 1, 0] - v0[0]
                e1y = tri[t, 1, 1] - v0[1]
                e1z = tri[t, 1, 2] - v0[2]
                e2x = tri[t, 2, 0] - v0[0]
                e2y = tri[t, 2, 1] - v0[1]
                e2z = tri[t, 2, 2] - v0[2]
                px = d[1] * e2z - d[2] * e2y
                py = d[2] * e2x - d[0] * e2z
                pz = d[0] * e2y - d[1] * e2x
                det = e1x * px + e1y * py + e1z * pz
                if abs(det) < 1e-14:
                    continue
                idet = 1.0 / det
                sx = origin[0] - v0[0]
                sy = origin[1] - v0[1]
                sz = origin[2] - v0[2]
                u = (sx * px + sy * py + sz * pz) * idet
                if u < 0.0 or u > 1.0:
                    continue
                qx = sy * e1z - sz * e1y
                qy = sz * e1x - sx * e1z
                qz = sx * e1y - sy * e1x
                v = (d[0] * qx + d[1] * qy + d[2] * qz) * idet
                if v < 0.0 or u + v > 1.0:
                    continue
                tt = (e2x * qx + e2y * qy + e2z * qz) * idet
                if tt > 1e-9 and tt < best:
                    best = tt
                    hit = True
        if hit:
            out[i] = best
    return out
