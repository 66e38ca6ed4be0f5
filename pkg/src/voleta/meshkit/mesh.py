from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ..errors import InvalidInputError

UNITS = ("unitless", "meters")


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle mesh.

    ``vertices`` is ``(n, 3)`` float64 and ``triangles`` ``(m, 3)`` int64.
    Both arrays are made read-only; operations return new meshes.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = ""
    unit: str = "unitless"

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.unit not in UNITS:
            raise InvalidInputError(f"unknown unit {self.unit!r}")
        if len(t):
            if t.min() < 0 or t.max() >= len(v):
                raise InvalidInputError("triangle index out of range")
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise InvalidInputError("degenerate triangle with repeated vertex index")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("vertex coordinates must be finite")
        v.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def is_empty(self):
        return self.n_triangles == 0

    def replace(self, **changes):
        fields = dict(vertices=self.vertices, triangles=self.triangles, name=self.name, unit=self.unit)
        fields.update(changes)
        return TriangleMesh(**fields)

    def __repr__(self):
        return (f"TriangleMesh(name={self.name!r}, |V|={self.n_vertices}, "
                f"|T|={self.n_triangles}, unit={self.unit!r})")


@dataclass(frozen=True)
class ComponentInfo:
    component_id: int
    triangle_ids: np.ndarray
    vertex_count: int
    diameter: float


def aabb_diagonal(points):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        return 0.0
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def _referenced(mesh):
    return np.unique(mesh.triangles)


def triangle_labels(mesh):
    """Component label per triangle; triangles sharing a vertex index connect."""
    n = mesh.n_vertices
    t = mesh.triangles
    rows = np.concatenate([t[:, 0], t[:, 1]])
    cols = np.concatenate([t[:, 1], t[:, 2]])
    graph = sparse.coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, vlabels = csgraph.connected_components(graph, directed=False)
    # relabel in order of first appearance so ids are stable
    tl = vlabels[t[:, 0]]
    _, first, inverse = np.unique(tl, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse]


def connected_components(mesh):
    if mesh.is_empty():
        raise InvalidInputError("mesh is empty")
    labels = triangle_labels(mesh)
    out = []
    for cid in range(labels.max() + 1):
        tri_ids = np.flatnonzero(labels == cid)
        verts = np.unique(mesh.triangles[tri_ids])
        out.append(ComponentInfo(cid, tri_ids, len(verts), aabb_diagonal(mesh.vertices[verts])))
    return out


def submesh(mesh, triangle_ids):
    """Mesh restricted to ``triangle_ids`` with unreferenced vertices dropped."""
    tris = mesh.triangles[np.asarray(triangle_ids, dtype=np.int64)]
    used, inverse = np.unique(tris, return_inverse=True)
    return mesh.replace(vertices=mesh.vertices[used], triangles=inverse.reshape(-1, 3))


def remove_isolated_pieces(mesh, diameter_fraction=0.05):
    """Drop every component whose AABB diagonal is at most
    ``diameter_fraction`` times the AABB diagonal of the whole mesh.

    The input is returned as-is when nothing is removed.
    """
    if not 0.0 <= diameter_fraction <= 1.0:
        raise InvalidInputError("diameter_fraction must lie in [0, 1]")
    if mesh.is_empty():
        return mesh
    limit = diameter_fraction * aabb_diagonal(mesh.vertices[_referenced(mesh)])
    comps = connected_components(mesh)
    keep = [c.triangle_ids for c in comps if c.diameter > limit]
    if len(keep) == len(comps):
        return mesh
    if not keep:
        return mesh.replace(vertices=np.empty((0, 3)), triangles=np.empty((0, 3), dtype=np.int64))
    return submesh(mesh, np.sort(np.concatenate(keep)))


def signed_volume(mesh):
    if mesh.is_empty():
        return 0.0
    v = mesh.vertices
    t = mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    dets = np.einsum("ij,ij->i", a, np.cross(b, c))
    # np.sum reduces pairwise, so the result does not depend on thread count
    return float(np.sum(dets)) / 6.0


def mesh_volume(mesh):
    """Enclosed volume via signed tetrahedra to the origin, in vertex units cubed.

    Closure and orientation are not checked; see :func:`boundary_edge_count`.
    """
    return abs(signed_volume(mesh))


def boundary_edge_count(mesh):
    """Number of edges used by exactly one triangle (0 for a watertight mesh)."""
    if mesh.is_empty():
        return 0
    t = mesh.triangles
    edges = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return int(np.sum(counts == 1))


def scale_mesh(mesh, s, metric=False):
    """Multiply every vertex by ``s``. ``metric=True`` marks the result as meters."""
    if not s > 0:
        raise InvalidInputError(f"scale must be positive, got {s}")
    unit = "meters" if metric else mesh.unit
    return mesh.replace(vertices=mesh.vertices * s, unit=unit)


def translate_mesh(mesh, offset):
    return mesh.replace(vertices=mesh.vertices + np.asarray(offset, dtype=np.float64))


def transform_mesh(mesh, rotation, translation):
    v = mesh.vertices @ np.asarray(rotation).T + np.asarray(translation)
    return mesh.replace(vertices=v)


def weld_vertices(mesh, eps=1e-7):
    """Merge vertices that fall in the same ``eps`` grid cell.

    Triangles that collapse after merging are dropped.
    """
    if mesh.n_vertices == 0:
        return mesh
    keys = np.round(mesh.vertices / eps).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    tris = inverse[mesh.triangles]
    ok = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    return mesh.replace(vertices=mesh.vertices[first], triangles=tris[ok])


def concatenate(meshes, name=""):
    meshes = list(meshes)
    verts, tris, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += m.n_vertices
    unit = meshes[0].unit if meshes else "unitless"
    return TriangleMesh(np.concatenate(verts) if verts else np.empty((0, 3)),
                        np.concatenate(tris) if tris else np.empty((0, 3), dtype=np.int64),
                        name=name, unit=unit)
