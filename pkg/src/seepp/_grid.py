"""Numba kernels for an incremental uniform hash grid over 3D points.

Points live in a growable ``pos`` array.  Each occupied cell is an entry of an
open-addressing table (``keys``/``heads``) whose value is the most recently
inserted point of that cell; ``nxt`` chains the remaining points of the cell.
All neighbourhood tests use closed balls (``d <= radius``).
"""

import numpy as np
from numba import njit

EMPTY = np.int64(-1)
_OFF = 1 << 20
_MASK21 = (1 << 21) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

CORE = np.uint8(0)
OUTLIER = np.uint8(1)
FRONTIER = np.uint8(2)


@njit(cache=True, inline="always")
def cell_of(x, inv_h):
    return np.int64(np.floor(x * inv_h))


@njit(cache=True, inline="always")
def pack(ix, iy, iz):
    return (((ix + _OFF) & _MASK21) << 42) | (((iy + _OFF) & _MASK21) << 21) | ((iz + _OFF) & _MASK21)


@njit(cache=True, inline="always")
def _hash(key, mask):
    return np.int64((np.uint64(key) * _GOLDEN) >> np.uint64(29)) & mask


@njit(cache=True)
def find_head(keys, heads, key):
    mask = keys.shape[0] - 1
    s = _hash(key, mask)
    while True:
        k = keys[s]
        if k == key:
            return heads[s]
        if k == EMPTY:
            return EMPTY
        s = (s + 1) & mask


@njit(cache=True)
def link(i, pos, nxt, keys, heads, inv_h):
    """Add point ``i`` to its cell; returns 1 when a new cell was opened."""
    key = pack(cell_of(pos[i, 0], inv_h), cell_of(pos[i, 1], inv_h), cell_of(pos[i, 2], inv_h))
    mask = keys.shape[0] - 1
    s = _hash(key, mask)
    while True:
        k = keys[s]
        if k == key:
            nxt[i] = heads[s]
            heads[s] = i
            return 0
        if k == EMPTY:
            keys[s] = key
            nxt[i] = EMPTY
            heads[s] = i
            return 1
        s = (s + 1) & mask


@njit(cache=True)
def rebuild(pos, n, nxt, keys, heads, inv_h):
    keys[:] = EMPTY
    cells = 0
    for i in range(n):
        cells += link(i, pos, nxt, keys, heads, inv_h)
    return cells


@njit(cache=True)
def _span(c, radius, inv_h):
    return (
        cell_of(c[0] - radius, inv_h), cell_of(c[0] + radius, inv_h),
        cell_of(c[1] - radius, inv_h), cell_of(c[1] + radius, inv_h),
        cell_of(c[2] - radius, inv_h), cell_of(c[2] + radius, inv_h),
    )


@njit(cache=True)
def _use_scan(c, radius, inv_h, n):
    x0, x1, y0, y1, z0, z1 = _span(c, radius, inv_h)
    return (x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1) > n


@njit(cache=True)
def ball(pos, n, nxt, keys, heads, inv_h, c, radius):
    """Indices of all points within ``radius`` of ``c`` (unordered)."""
    r2 = radius * radius
    out = np.empty(64, dtype=np.int64)
    m = 0
    if _use_scan(c, radius, inv_h, n):
        for j in range(n):
            dx = pos[j, 0] - c[0]
            dy = pos[j, 1] - c[1]
            dz = pos[j, 2] - c[2]
            if dx * dx + dy * dy + dz * dz <= r2:
                if m == out.shape[0]:
                    grown = np.empty(2 * m, dtype=np.int64)
                    grown[:m] = out
                    out = grown
                out[m] = j
                m += 1
        return out[:m]
    x0, x1, y0, y1, z0, z1 = _span(c, radius, inv_h)
    for ix in range(x0, x1 + 1):
        for iy in range(y0, y1 + 1):
            for iz in range(z0, z1 + 1):
                j = find_head(keys, heads, pack(ix, iy, iz))
                while j != EMPTY:
                    dx = pos[j, 0] - c[0]
                    dy = pos[j, 1] - c[1]
                    dz = pos[j, 2] - c[2]
                    if dx * dx + dy * dy + dz * dz <= r2:
                        if m == out.shape[0]:
                            grown = np.empty(2 * m, dtype=np.int64)
                            grown[:m] = out
                            out = grown
                        out[m] = j
                        m += 1
                    j = nxt[j]
    return out[:m]


@njit(cache=True)
def ball_count(pos, n, nxt, keys, heads, inv_h, c, radius):
    r2 = radius * radius
    m = 0
    x0, x1, y0, y1, z0, z1 = _span(c, radius, inv_h)
    for ix in range(x0, x1 + 1):
        for iy in range(y0, y1 + 1):
            for iz in range(z0, z1 + 1):
                j = find_head(keys, heads, pack(ix, iy, iz))
                while j != EMPTY:
                    dx = pos[j, 0] - c[0]
                    dy = pos[j, 1] - c[1]
                    dz = pos[j, 2] - c[2]
                    if dx * dx + dy * dy + dz * dz <= r2:
                        m += 1
                    j = nxt[j]
    return m


@njit(cache=True)
def ball_any(pos, n, nxt, keys, heads, inv_h, c, radius, skip, f, skip_r):
    """True if some point within ``radius`` of ``c`` is neither index ``skip``
    nor within ``skip_r`` of ``f``."""
    r2 = radius * radius
    s2 = skip_r * skip_r
    x0, x1, y0, y1, z0, z1 = _span(c, radius, inv_h)
    for ix in range(x0, x1 + 1):
        for iy in range(y0, y1 + 1):
            for iz in range(z0, z1 + 1):
                j = find_head(keys, heads, pack(ix, iy, iz))
                while j != EMPTY:
                    if j != skip:
                        dx = pos[j, 0] - c[0]
                        dy = pos[j, 1] - c[1]
                        dz = pos[j, 2] - c[2]
                        if dx * dx + dy * dy + dz * dz <= r2:
                            ex = pos[j, 0] - f[0]
                            ey = pos[j, 1] - f[1]
                            ez = pos[j, 2] - f[2]
                            if ex * ex + ey * ey + ez * ez > s2:
                                return True
                    j = nxt[j]
    return False


@njit(cache=True)
def insert_filtered(pos, n, nxt, keys, heads, inv_h, cand, eps):
    """Sequentially append candidates whose closed ``eps`` ball is empty.

    Earlier accepted candidates veto later ones.  Capacity of ``pos``/``nxt``
    and the table must already cover ``len(cand)`` more points.
    Returns (accepted mask, new point count, cells opened).
    """
    e2 = eps * eps
    acc = np.zeros(cand.shape[0], dtype=np.bool_)
    opened = 0
    for t in range(cand.shape[0]):
        c = cand[t]
        x0, x1, y0, y1, z0, z1 = _span(c, eps, inv_h)
        clash = False
        for ix in range(x0, x1 + 1):
            for iy in range(y0, y1 + 1):
                for iz in range(z0, z1 + 1):
                    j = find_head(keys, heads, pack(ix, iy, iz))
                    while j != EMPTY:
                        dx = pos[j, 0] - c[0]
                        dy = pos[j, 1] - c[1]
                        dz = pos[j, 2] - c[2]
                        if dx * dx + dy * dy + dz * dz <= e2:
                            clash = True
                            break
                        j = nxt[j]
                    if clash:
                        break
                if clash:
                    break
            if clash:
                break
        if not clash:
            pos[n, 0] = c[0]
            pos[n, 1] = c[1]
            pos[n, 2] = c[2]
            opened += link(n, pos, nxt, keys, heads, inv_h)
            acc[t] = True
            n += 1
    return acc, n, opened


@njit(cache=True)
def add_neighbor_counts(pos, n, nxt, keys, heads, inv_h, n_old, r, counts):
    """Update self-excluded r-neighbour counts after points ``n_old..n-1`` were appended."""
    r2 = r * r
    for p in range(n_old, n):
        c = pos[p]
        x0, x1, y0, y1, z0, z1 = _span(c, r, inv_h)
        own = 0
        for ix in range(x0, x1 + 1):
            for iy in range(y0, y1 + 1):
                for iz in range(z0, z1 + 1):
                    j = find_head(keys, heads, pack(ix, iy, iz))
                    while j != EMPTY:
                        if j != p:
                            dx = pos[j, 0] - c[0]
                            dy = pos[j, 1] - c[1]
                            dz = pos[j, 2] - c[2]
                            if dx * dx + dy * dy + dz * dz <= r2:
                                own += 1
                                if j < n_old:
                                    counts[j] += 1
                        j = nxt[j]
        counts[p] = own


@njit(cache=True)
def _mark_ball(pos, n, nxt, keys, heads, inv_h, c, r, mark, stamp, out, m):
    r2 = r * r
    x0, x1, y0, y1, z0, z1 = _span(c, r, inv_h)
    for ix in range(x0, x1 + 1):
        for iy in range(y0, y1 + 1):
            for iz in range(z0, z1 + 1):
                j = find_head(keys, heads, pack(ix, iy, iz))
                while j != EMPTY:
                    if mark[j] != stamp:
                        dx = pos[j, 0] - c[0]
                        dy = pos[j, 1] - c[1]
                        dz = pos[j, 2] - c[2]
                        if dx * dx + dy * dy + dz * dz <= r2:
                            mark[j] = stamp
                            if m == out.shape[0]:
                                grown = np.empty(2 * m, dtype=np.int64)
                                grown[:m] = out
                                out = grown
                            out[m] = j
                            m += 1
                    j = nxt[j]
    return out, m


@njit(cache=True)
def _frontier_test(pos, n, nxt, keys, heads, inv_h, p, r, is_core):
    r2 = r * r
    c = pos[p]
    seen_core = False
    seen_other = False
    x0, x1, y0, y1, z0, z1 = _span(c, r, inv_h)
    for ix in range(x0, x1 + 1):
        for iy in range(y0, y1 + 1):
            for iz in range(z0, z1 + 1):
                j = find_head(keys, heads, pack(ix, iy, iz))
                while j != EMPTY:
                    if j != p:
                        dx = pos[j, 0] - c[0]
                        dy = pos[j, 1] - c[1]
                        dz = pos[j, 2] - c[2]
                        if dx * dx + dy * dy + dz * dz <= r2:
                            if is_core[j]:
                                seen_core = True
                            else:
                                seen_other = True
                            if seen_core and seen_other:
                                return True
                    j = nxt[j]
    return False


@njit(cache=True)
def reclassify(pos, n, nxt, keys, heads, inv_h, affected, r, k_core, counts, cls):
    """Recompute classes for ``affected`` and everything whose class can depend on them.

    Returns (indices, old classes, new classes) of the points that changed.
    """
    mark = np.zeros(n, dtype=np.int8)
    region = np.empty(max(16, affected.shape[0] * 4), dtype=np.int64)
    m = 0
    for a in affected:
        region, m = _mark_ball(pos, n, nxt, keys, heads, inv_h, pos[a], r, mark, 1, region, m)
        if mark[a] != 1:
            mark[a] = 1
            if m == region.shape[0]:
                grown = np.empty(2 * m, dtype=np.int64)
                grown[:m] = region
                region = grown
            region[m] = a
            m += 1
    is_core = cls == CORE
    flipped = np.empty(16, dtype=np.int64)
    nf = 0
    for t in range(m):
        p = region[t]
        core = counts[p] >= k_core
        if core != is_core[p]:
            is_core[p] = core
            if nf == flipped.shape[0]:
                grown = np.empty(2 * nf, dtype=np.int64)
                grown[:nf] = flipped
                flipped = grown
            flipped[nf] = p
            nf += 1
    for t in range(nf):
        region, m = _mark_ball(pos, n, nxt, keys, heads, inv_h, pos[flipped[t]], r, mark, 1, region, m)
    idx = np.empty(m, dtype=np.int64)
    old = np.empty(m, dtype=np.uint8)
    new = np.empty(m, dtype=np.uint8)
    k = 0
    for t in range(m):
        p = region[t]
        if is_core[p]:
            c = CORE
        elif _frontier_test(pos, n, nxt, keys, heads, inv_h, p, r, is_core):
            c = FRONTIER
        else:
            c = OUTLIER
        if c != cls[p]:
            idx[k] = p
            old[k] = cls[p]
            new[k] = c
            k += 1
    for t in range(k):
        cls[idx[t]] = new[t]
    return idx[:k], old[:k], new[:k]
