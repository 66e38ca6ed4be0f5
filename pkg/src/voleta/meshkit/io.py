"""OBJ (ASCII) and PLY (ASCII / binary little-endian) triangle mesh I/O.

Only geometry is kept: vertex colours, normals and texture coordinates
are read past and dropped. Polygons are fan-triangulated from their first
vertex.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import InvalidInputError, MeshParseError
from .mesh import TriangleMesh

PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _fan(poly):
    return [(poly[0], poly[k], poly[k + 1]) for k in range(1, len(poly) - 1)]


def _finish(vertices, faces, path, name, unit):
    v = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    t = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if len(t) and (t.min() < 0 or t.max() >= len(v)):
        raise MeshParseError("face index out of range", path)
    # fan triangulation of polygons with repeated corners yields slivers
    ok = (t[:, 0] != t[:, 1]) & (t[:, 1] != t[:, 2]) & (t[:, 0] != t[:, 2])
    return TriangleMesh(v, t[ok], name=name or Path(path).stem, unit=unit)


def load_mesh(path, unit="unitless", name=None):
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".obj":
        return _load_obj(path, unit, name)
    if ext == ".ply":
        return _load_ply(path, unit, name)
    raise MeshParseError(f"unsupported mesh extension {ext!r}", path)


def save_mesh(mesh, path, binary=False):
    """Write ``mesh`` as OBJ or PLY, chosen by extension.

    Coordinates are written with 17 significant digits so a round trip is
    exact. ``binary`` selects binary little-endian PLY.
    """
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".obj":
        data = _obj_bytes(mesh)
    elif ext == ".ply":
        data = _ply_bytes(mesh, binary)
    else:
        raise InvalidInputError(f"unsupported mesh extension {ext!r}")
    with open(path, "wb") as fh:
        fh.write(data)


def _load_obj(path, unit, name):
    vertices, faces = [], []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshParseError("vertex needs 3 coordinates", path, f"line {lineno}")
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError:
                    raise MeshParseError("bad vertex coordinate", path, f"line {lineno}") from None
            elif tag == "f":
                poly = []
                for tok in parts[1:]:
                    try:
                        idx = int(tok.split("/")[0])
                    except ValueError:
                        raise MeshParseError(f"bad face index {tok!r}", path, f"line {lineno}") from None
                    if idx < 0:
                        idx = len(vertices) + idx
                    else:
                        idx -= 1
                    if not 0 <= idx < len(vertices):
                        raise MeshParseError(f"face references missing vertex {tok}", path, f"line {lineno}")
                    poly.append(idx)
                if len(poly) < 3:
                    raise MeshParseError("face needs at least 3 vertices", path, f"line {lineno}")
                faces.extend(_fan(poly))
    return _finish(vertices, faces, path, name, unit)


def _obj_bytes(mesh):
    lines = [f"# {mesh.name}" if mesh.name else "# mesh"]
    lines += ["v %.17g %.17g %.17g" % tuple(v) for v in mesh.vertices]
    lines += ["f %d %d %d" % tuple(t + 1) for t in mesh.triangles]
    return ("\n".join(lines) + "\n").encode("ascii")


def _ply_header(fh, path):
    first = fh.readline().strip()
    if first != b"ply":
        raise MeshParseError("missing 'ply' magic", path, "line 1")
    fmt = None
    elements = []
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise MeshParseError("header not terminated by end_header", path, f"line {lineno}")
        parts = raw.decode("ascii", errors="replace").split()
        if not parts:
            continue
        key = parts[0]
        if key == "format":
            if len(parts) < 2 or parts[1] not in ("ascii", "binary_little_endian", "binary_big_endian"):
                raise MeshParseError("unknown format line", path, f"line {lineno}")
            fmt = parts[1]
        elif key == "element":
            if len(parts) != 3:
                raise MeshParseError("malformed element line", path, f"line {lineno}")
            elements.append({"name": parts[1], "count": int(parts[2]), "props": []})
        elif key == "property":
            if not elements:
                raise MeshParseError("property before element", path, f"line {lineno}")
            if parts[1] == "list":
                if len(parts) != 5 or parts[2] not in PLY_TYPES or parts[3] not in PLY_TYPES:
                    raise MeshParseError("malformed list property", path, f"line {lineno}")
                elements[-1]["props"].append((parts[4], "list", PLY_TYPES[parts[2]], PLY_TYPES[parts[3]]))
            else:
                if len(parts) != 3 or parts[1] not in PLY_TYPES:
                    raise MeshParseError("malformed property", path, f"line {lineno}")
                elements[-1]["props"].append((parts[2], "scalar", PLY_TYPES[parts[1]], None))
        elif key == "end_header":
            break
        elif key in ("comment", "obj_info"):
            continue
        else:
            raise MeshParseError(f"unexpected header keyword {key!r}", path, f"line {lineno}")
    if fmt is None:
        raise MeshParseError("no format line in header", path)
    if fmt == "binary_big_endian":
        raise MeshParseError("binary big-endian PLY is not supported", path)
    return fmt, elements, lineno


def _load_ply(path, unit, name):
    with open(path, "rb") as fh:
        fmt, elements, header_lines = _ply_header(fh, path)
        if fmt == "ascii":
            records = _read_ply_ascii(fh, elements, path, header_lines)
        else:
            records = _read_ply_binary(fh, elements, path)
    vert = records.get("vertex")
    if vert is None:
        raise MeshParseError("no vertex element", path)
    try:
        vertices = np.column_stack([vert["x"], vert["y"], vert["z"]])
    except KeyError:
        raise MeshParseError("vertex element lacks x/y/z", path) from None
    polys = records.get("face", {}).get("__faces__", [])
    if isinstance(polys, np.ndarray):
        if len(polys) and (polys.min() < 0 or polys.max() >= len(vertices)):
            raise MeshParseError(f"face references missing vertex {polys.max()}", path)
        return _finish(vertices, polys, path, name, unit)
    faces = []
    for poly in polys:
        if len(poly) < 3:
            raise MeshParseError("face with fewer than 3 indices", path)
        if min(poly) < 0 or max(poly) >= len(vertices):
            raise MeshParseError(f"face references missing vertex {max(poly)}", path)
        faces.extend(_fan(list(poly)))
    return _finish(vertices, faces, path, name, unit)


def _face_prop(el):
    for pname, kind, _, _ in el["props"]:
        if kind == "list" and pname in ("vertex_indices", "vertex_index"):
            return pname
    return None


def _read_ply_ascii(fh, elements, path, lineno):
    out = {}
    for el in elements:
        face_prop = _face_prop(el) if el["name"] == "face" else None
        cols = {p[0]: [] for p in el["props"] if p[1] == "scalar"}
        faces = []
        for _ in range(el["count"]):
            raw = fh.readline()
            lineno += 1
            if not raw:
                raise MeshParseError(f"unexpected end of file in element {el['name']!r}", path, f"line {lineno}")
            toks = raw.split()
            pos = 0
            try:
                for pname, kind, t1, _ in el["props"]:
                    if kind == "scalar":
                        cols[pname].append(float(toks[pos]))
                        pos += 1
                    else:
                        n = int(toks[pos])
                        vals = [int(x) for x in toks[pos + 1:pos + 1 + n]]
                        if len(vals) != n:
                            raise IndexError
                        pos += 1 + n
                        if pname == face_prop:
                            faces.append(vals)
            except (IndexError, ValueError):
                raise MeshParseError(f"malformed {el['name']} record", path, f"line {lineno}") from None
        rec = {k: np.asarray(v) for k, v in cols.items()}
        if face_prop:
            rec["__faces__"] = faces
        out[el["name"]] = rec
    return out


def _read_ply_binary(fh, elements, path):
    out = {}
    for el in elements:
        face_prop = _face_prop(el) if el["name"] == "face" else None
        props = el["props"]
        start = fh.tell()
        if all(p[1] == "scalar" for p in props):
            dtype = np.dtype([(p[0], "<" + p[2]) for p in props])
            buf = fh.read(dtype.itemsize * el["count"])
            if len(buf) != dtype.itemsize * el["count"]:
                raise MeshParseError(f"truncated element {el['name']!r}", path, f"byte {start}")
            arr = np.frombuffer(buf, dtype=dtype)
            out[el["name"]] = {p[0]: arr[p[0]].astype(np.float64) for p in props}
            continue
        if face_prop and len(props) == 1:
            fast = _try_triangle_block(fh, props[0], el["count"])
            if fast is not None:
                out[el["name"]] = {"__faces__": fast}
                continue
        faces = []
        cols = {p[0]: [] for p in props if p[1] == "scalar"}
        for _ in range(el["count"]):
            for pname, kind, t1, t2 in props:
                if kind == "scalar":
                    dt = np.dtype("<" + t1)
                    buf = fh.read(dt.itemsize)
                    if len(buf) != dt.itemsize:
                        raise MeshParseError(f"truncated element {el['name']!r}", path, f"byte {fh.tell()}")
                    cols[pname].append(np.frombuffer(buf, dt)[0])
                else:
                    ct = np.dtype("<" + t1)
                    buf = fh.read(ct.itemsize)
                    if len(buf) != ct.itemsize:
                        raise MeshParseError(f"truncated element {el['name']!r}", path, f"byte {fh.tell()}")
                    n = int(np.frombuffer(buf, ct)[0])
                    it = np.dtype("<" + t2)
                    buf = fh.read(it.itemsize * n)
                    if len(buf) != it.itemsize * n:
                        raise MeshParseError(f"truncated list in {el['name']!r}", path, f"byte {fh.tell()}")
                    if pname == face_prop:
                        faces.append(np.frombuffer(buf, it).astype(np.int64).tolist())
        rec = {k: np.asarray(v, dtype=np.float64) for k, v in cols.items()}
        if face_prop:
            rec["__faces__"] = faces
        out[el["name"]] = rec
    return out


def _try_triangle_block(fh, prop, count):
    # common case: every face is a triangle, so the block has a fixed layout
    _, _, t1, t2 = prop
    dtype = np.dtype([("n", "<" + t1), ("idx", "<" + t2, (3,))])
    start = fh.tell()
    buf = fh.read(dtype.itemsize * count)
    if len(buf) == dtype.itemsize * count:
        arr = np.frombuffer(buf, dtype=dtype)
        if np.all(arr["n"] == 3):
            return arr["idx"].astype(np.int64)
    fh.seek(start)
    return None


def _ply_bytes(mesh, binary):
    fmt = "binary_little_endian" if binary else "ascii"
    header = "\n".join([
        "ply",
        f"format {fmt} 1.0",
        f"comment {mesh.name}" if mesh.name else "comment mesh",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_triangles}",
        "property list uchar int vertex_indices",
        "end_header",
    ]) + "\n"
    if not binary:
        body = ["%.17g %.17g %.17g" % tuple(v) for v in mesh.vertices]
        body += ["3 %d %d %d" % tuple(t) for t in mesh.triangles]
        return (header + "".join(line + "\n" for line in body)).encode("ascii")
    faces = np.empty(mesh.n_triangles, dtype=[("n", "u1"), ("idx", "<i4", (3,))])
    faces["n"] = 3
    faces["idx"] = mesh.triangles
    verts = np.ascontiguousarray(mesh.vertices, dtype="<f8")
    return header.encode("ascii") + verts.tobytes() + faces.tobytes()
