"""Minimal PLY / OBJ triangle-mesh readers.

Polygons with more than three corners are split into a fan around their first
vertex.  Units are taken as metres.
"""

from __future__ import annotations

import os

import numpy as np

PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


class MeshParseError(ValueError):
    pass


def fan(poly):
    return [(poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1)]


def load_mesh(path):
    """Read a ``.ply`` or ``.obj`` file into a :class:`~seepp.sensor_sim.SceneMesh`."""
    from .sensor_sim import SceneMesh

    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".ply":
        v, f = read_ply(path)
    elif ext == ".obj":
        v, f = read_obj(path)
    else:
        raise MeshParseError(f"{path}: unsupported mesh extension {ext!r}")
    return SceneMesh(v, f)


# -- OBJ -----------------------------------------------------------------

def read_obj(path):
    verts, tris = [], []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                    if len(verts[-1]) != 3:
                        raise ValueError("vertex needs three coordinates")
                elif parts[0] == "f":
                    poly = []
                    for tok in parts[1:]:
                        i = int(tok.split("/")[0])
                        poly.append(i - 1 if i > 0 else len(verts) + i)
                    if len(poly) < 3:
                        raise ValueError("face needs at least three vertices")
                    tris.extend(fan(poly))
            except ValueError as exc:
                raise MeshParseError(f"{path}:{lineno}: {exc}") from None
    v = np.array(verts, dtype=np.float64).reshape(-1, 3)
    f = np.array(tris, dtype=np.int64).reshape(-1, 3)
    if len(f) and (f.min() < 0 or f.max() >= len(v)):
        raise MeshParseError(f"{path}: face references a missing vertex")
    return v, f


# -- PLY -----------------------------------------------------------------

def _ply_header(fh, path):
    if fh.readline().strip() != b"ply":
        raise MeshParseError(f"{path}:1: missing 'ply' magic")
    fmt = None
    elements = []  # (name, count, [(prop, dtype) | (prop, count_dtype, item_dtype)])
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise MeshParseError(f"{path}:{lineno}: header not terminated")
        parts = raw.decode("ascii", "replace").split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        try:
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if parts[1] == "list":
                    elements[-1][2].append((parts[4], PLY_TYPES[parts[2]], PLY_TYPES[parts[3]]))
                else:
                    elements[-1][2].append((parts[2], PLY_TYPES[parts[1]]))
            elif parts[0] == "end_header":
                break
        except (IndexError, KeyError, ValueError):
            raise MeshParseError(f"{path}:{lineno}: bad header line {raw!r}") from None
    if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
        raise MeshParseError(f"{path}: unsupported PLY format {fmt!r}")
    return fmt, elements


def read_ply(path):
    with open(path, "rb") as fh:
        fmt, elements = _ply_header(fh, path)
        body = fh.read()
    if fmt == "ascii":
        return _ply_ascii(body, elements, path)
    return _ply_binary(body, elements, "<" if fmt.endswith("little_endian") else ">", path)


def _face_prop(props):
    for p in props:
        if len(p) == 3 and p[0] in ("vertex_indices", "vertex_index"):
            return p[0]
    return None


def _ply_ascii(body, elements, path):
    lines = body.decode("ascii", "replace").splitlines()
    pos = 0
    verts = np.empty((0, 3))
    tris = []
    for name, count, props in elements:
        rows = []
        for _ in range(count):
            while pos < len(lines) and not lines[pos].strip():
                pos += 1
            if pos >= len(lines):
                raise MeshParseError(f"{path}: unexpected end of data in element {name!r}")
            tok = lines[pos].split()
            pos += 1
            vals, k = {}, 0
            try:
                for p in props:
                    if len(p) == 3:
                        c = int(tok[k])
                        vals[p[0]] = [int(t) for t in tok[k + 1:k + 1 + c]]
                        if len(vals[p[0]]) != c:
                            raise IndexError
                        k += 1 + c
                    else:
                        vals[p[0]] = float(tok[k])
                        k += 1
            except (IndexError, ValueError):
                raise MeshParseError(f"{path}: malformed {name} record {pos} of body: {lines[pos - 1]!r}") from None
            rows.append(vals)
        if name == "vertex":
            verts = np.array([[r["x"], r["y"], r["z"]] for r in rows], dtype=np.float64).reshape(-1, 3)
        elif name == "face":
            key = _face_prop(props)
            for r in rows:
                tris.extend(fan(r[key]))
    return _check(verts, tris, path)


def _ply_binary(body, elements, order, path):
    off = 0
    verts = np.empty((0, 3))
    tris = []
    for name, count, props in elements:
        if all(len(p) == 2 for p in props):
            dt = np.dtype([(p[0], order + p[1]) for p in props])
            need = dt.itemsize * count
            if off + need > len(body):
                raise MeshParseError(f"{path}: truncated {name} data at byte {off}")
            arr = np.frombuffer(body, dtype=dt, count=count, offset=off)
            off += need
            if name == "vertex":
                verts = np.column_stack([arr["x"], arr["y"], arr["z"]]).astype(np.float64)
            continue
        key = _face_prop(props)
        for _ in range(count):
            for p in props:
                if len(p) == 3:
                    cdt = np.dtype(order + p[1])
                    idt = np.dtype(order + p[2])
                    if off + cdt.itemsize > len(body):
                        raise MeshParseError(f"{path}: truncated {name} data at byte {off}")
                    c = int(np.frombuffer(body, cdt, 1, off)[0])
                    off += cdt.itemsize
                    if off + c * idt.itemsize > len(body):
                        raise MeshParseError(f"{path}: truncated {name} data at byte {off}")
                    items = np.frombuffer(body, idt, c, off).tolist()
                    off += c * idt.itemsize
                    if name == "face" and p[0] == key:
                        tris.extend(fan(items))
                else:
                    off += np.dtype(p[1]).itemsize
    return _check(verts, tris, path)


def _check(verts, tris, path):
    f = np.array(tris, dtype=np.int64).reshape(-1, 3)
    if len(f) and (f.min() < 0 or f.max() >= len(verts)):
        raise MeshParseError(f"{path}: face references a missing vertex")
    return verts, f
