"""Smallest enclosing ball of 3D points (Welzl's algorithm, move-free nested form).

The four nesting levels correspond to 0..3 fixed boundary points; with the
input visited in random order the expected running time is linear.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _ball2(a, b):
    c = 0.5 * (a + b)
    d = a - c
    return c, np.sqrt(d @ d)


@njit(cache=True)
def _ball3(a, b, c):
    ab = b - a
    ac = c - a
    n = np.cross(ab, ac)
    nn = n @ n
    if nn < 1e-30:
        # collinear: the two farthest points span the ball
        best = _ball2(a, b)
        for cand in (_ball2(a, c), _ball2(b, c)):
            if cand[1] > best[1]:
                best = cand
        return best
    off = ((ac @ ac) * np.cross(n, ab) + (ab @ ab) * np.cross(ac, n)) / (2.0 * nn)
    centre = a + off
    return centre, np.sqrt(off @ off)


@njit(cache=True)
def _ball4(a, b, c, d):
    m = np.empty((3, 3))
    m[0] = b - a
    m[1] = c - a
    m[2] = d - a
    rhs = np.empty(3)
    rhs[0] = 0.5 * (m[0] @ m[0])
    rhs[1] = 0.5 * (m[1] @ m[1])
    rhs[2] = 0.5 * (m[2] @ m[2])
    det = np.linalg.det(m)
    scale = np.sqrt(m[0] @ m[0]) * np.sqrt(m[1] @ m[1]) * np.sqrt(m[2] @ m[2])
    if abs(det) <= 1e-12 * scale:
        # coplanar support: fall back to the largest of the triangle circles
        best = _ball3(a, b, c)
        for cand in (_ball3(a, b, d), _ball3(a, c, d), _ball3(b, c, d)):
            if cand[1] > best[1]:
                best = cand
        return best
    off = np.linalg.solve(m, rhs)
    return a + off, np.sqrt(off @ off)


@njit(cache=True)
def _outside(p, c, r, tol):
    d = p - c
    return np.sqrt(d @ d) > r + tol


@njit(cache=True)
def _with3(P, k, q1, q2, q3, tol):
    c, r = _ball3(q1, q2, q3)
    for i in range(k):
        if _outside(P[i], c, r, tol):
            c, r = _ball4(q1, q2, q3, P[i])
    return c, r


@njit(cache=True)
def _with2(P, k, q1, q2, tol):
    c, r = _ball2(q1, q2)
    for i in range(k):
        if _outside(P[i], c, r, tol):
            c, r = _with3(P, i, q1, q2, P[i], tol)
    return c, r


@njit(cache=True)
def _with1(P, k, q1, tol):
    c = q1.copy()
    r = 0.0
    for i in range(k):
        if _outside(P[i], c, r, tol):
            c, r = _with2(P, i, q1, P[i], tol)
    return c, r


@njit(cache=True)
def _welzl(P, tol):
    c = P[0].copy()
    r = 0.0
    for i in range(1, P.shape[0]):
        if _outside(P[i], c, r, tol):
            c, r = _with1(P, i, P[i], tol)
    return c, r


def smallest_enclosing_ball(points, seed: int = 0, tol: float = 1e-12):
    """Centre and radius of the smallest ball containing ``points`` (n, 3).

    The visiting order is a seeded permutation, so results are deterministic.
    """
    P = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(P) == 0:
        raise ValueError("no points")
    order = np.random.default_rng(seed).permutation(len(P))
    scale = max(1.0, float(np.abs(P).max()))
    c, r = _welzl(np.ascontiguousarray(P[order]), tol * scale)
    return np.asarray(c), float(r)
