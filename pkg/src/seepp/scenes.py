"""Built-in scenes: the Newell teapot and a few primitives for tests."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .sensor_sim import SceneMesh


def _bernstein(t):
    s = 1.0 - t
    return np.stack([s ** 3, 3 * t * s ** 2, 3 * t ** 2 * s, t ** 3], axis=-1)


def teapot(size: float = 1.0, subdivisions: int = 10) -> SceneMesh:
    """Tessellated teapot, z up, centred, largest extent ``size`` metres."""
    data = json.loads(resources.files("seepp").joinpath("data", "teapot.json").read_text())
    cp = np.asarray(data["vertices"], dtype=np.float64)
    t = np.linspace(0.0, 1.0, subdivisions + 1)
    b = _bernstein(t)
    g = subdivisions + 1
    verts, tris = [], []
    for p, patch in enumerate(data["patches"]):
        ctrl = cp[np.asarray(patch)].reshape(4, 4, 3)
        if 20 <= p < 28:  # lid patches are slightly narrow in the raw data
            ctrl = ctrl * np.array([1.077, 1.077, 1.0])
        surf = np.einsum("ui,vj,ijk->uvk", b, b, ctrl).reshape(-1, 3)
        base = len(verts) * g * g
        verts.append(surf)
        for i in range(subdivisions):
            for j in range(subdivisions):
                a = base + i * g + j
                tris.append((a, a + g, a + 1))
                tris.append((a + 1, a + g, a + g + 1))
    mesh = SceneMesh(np.concatenate(verts), np.array(tris))
    return _drop_degenerate(mesh).normalized(size)


def cube(size: float = 1.0) -> SceneMesh:
    h = size / 2.0
    v = np.array([[x, y, z] for x in (-h, h) for y in (-h, h) for z in (-h, h)])
    f = [(0, 1, 3), (0, 3, 2), (4, 6, 7), (4, 7, 5), (0, 4, 5), (0, 5, 1),
         (2, 3, 7), (2, 7, 6), (0, 2, 6), (0, 6, 4), (1, 5, 7), (1, 7, 3)]
    return SceneMesh(v, f)


def quad(center, u, v) -> SceneMesh:
    """Parallelogram ``center +- u +- v`` as two triangles."""
    c, u, v = (np.asarray(a, dtype=np.float64) for a in (center, u, v))
    return SceneMesh([c - u - v, c + u - v, c + u + v, c - u + v], [(0, 1, 2), (0, 2, 3)])


def merge(*meshes: SceneMesh) -> SceneMesh:
    verts, tris, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + off)
        off += len(m.vertices)
    return SceneMesh(np.concatenate(verts), np.concatenate(tris))


def _drop_degenerate(mesh: SceneMesh, tol: float = 1e-12) -> SceneMesh:
    keep = mesh.triangle_areas() > tol
    return SceneMesh(mesh.vertices, mesh.triangles[keep])


BUILTIN = {"teapot": teapot, "cube": cube}


def load_scene(source: str) -> SceneMesh:
    """``builtin:<name>`` or a path to a PLY/OBJ file."""
    from .mesh_io import load_mesh

    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in BUILTIN:
            raise ValueError(f"unknown builtin scene {name!r}; choose from {sorted(BUILTIN)}")
        return BUILTIN[name]()
    return load_mesh(source)
