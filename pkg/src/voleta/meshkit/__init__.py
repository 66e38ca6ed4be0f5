"""Triangle-mesh ingestion, cleanup, volume and scaling."""
from .io import load_mesh, save_mesh
from .mesh import (
    ComponentInfo,
    TriangleMesh,
    aabb_diagonal,
    boundary_edge_count,
    concatenate,
    connected_components,
    mesh_volume,
    remove_isolated_pieces,
    scale_mesh,
    signed_volume,
    submesh,
    transform_mesh,
    translate_mesh,
    weld_vertices,
)
from .primitives import box, icosphere, tetrahedron

__all__ = [
    "ComponentInfo", "TriangleMesh", "aabb_diagonal", "boundary_edge_count", "box",
    "concatenate", "connected_components", "icosphere", "load_mesh", "mesh_volume",
    "remove_isolated_pieces", "save_mesh", "scale_mesh", "signed_volume", "submesh",
    "tetrahedron", "transform_mesh", "translate_mesh", "weld_vertices",
]
