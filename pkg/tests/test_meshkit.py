import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from voleta.errors import InvalidInputError
from voleta.meshkit import (
    TriangleMesh,
    aabb_diagonal,
    boundary_edge_count,
    box,
    concatenate,
    connected_components,
    icosphere,
    mesh_volume,
    remove_isolated_pieces,
    scale_mesh,
    signed_volume,
    tetrahedron,
    translate_mesh,
    weld_vertices,
)


def jittered_sphere(rng, subdivisions=1):
    s = icosphere(subdivisions)
    v = s.vertices * rng.uniform(0.5, 1.5, size=(len(s.vertices), 1)) + rng.normal(size=3) * 3
    return s.replace(vertices=v)


def random_scene(rng, n_parts):
    parts = []
    for _ in range(n_parts):
        size = rng.uniform(0.005, 2.0, size=3)
        parts.append(box(tuple(size), origin=tuple(rng.uniform(-5, 5, size=3))))
    return concatenate(parts)


# --- construction ------------------------------------------------------------

def test_rejects_out_of_range_index():
    with pytest.raises(InvalidInputError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])


def test_rejects_degenerate_triangle():
    with pytest.raises(InvalidInputError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])


def test_arrays_are_read_only():
    m = box()
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0


# --- components --------------------------------------------------------------

def test_single_cube_component():
    (c,) = connected_components(box())
    assert c.vertex_count == 8
    assert len(c.triangle_ids) == 12
    assert c.diameter == pytest.approx(math.sqrt(3), abs=1e-12)


def test_two_far_cubes_are_two_components():
    m = concatenate([box(), box(origin=(10, 0, 0))])
    assert len(connected_components(m)) == 2


def test_triangles_sharing_one_vertex_connect():
    m = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], [[0, 1, 2], [0, 3, 4]])
    assert len(connected_components(m)) == 1


def test_duplicated_seam_splits_until_welded():
    a = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    b = TriangleMesh([[1, 0, 0], [0, 1, 0], [1, 1, 0]], [[0, 2, 1]])
    m = concatenate([a, b])
    assert len(connected_components(m)) == 2
    welded = weld_vertices(m)
    assert welded.n_vertices == 4
    assert len(connected_components(welded)) == 1


def test_connected_components_rejects_empty():
    with pytest.raises(InvalidInputError):
        connected_components(TriangleMesh(np.empty((0, 3)), np.empty((0, 3))))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_components_partition_triangles(n, seed):
    m = random_scene(np.random.default_rng(seed), n)
    comps = connected_components(m)
    ids = np.concatenate([c.triangle_ids for c in comps])
    assert len(ids) == m.n_triangles
    assert sorted(ids.tolist()) == list(range(m.n_triangles))


# --- cleanup -----------------------------------------------------------------

def test_satellite_removed(cube_with_satellite):
    m = cube_with_satellite
    d = aabb_diagonal(m.vertices)
    small = math.sqrt(3) * 0.01
    assert small <= 0.05 * d  # the fixture is constructed so the satellite qualifies
    out = remove_isolated_pieces(m, 0.05)
    assert len(connected_components(out)) == 1
    assert out.n_triangles == 12
    assert out.n_vertices == 8
    assert mesh_volume(out) == pytest.approx(1.0, abs=1e-12)


def test_fraction_zero_is_identity(cube_with_satellite):
    out = remove_isolated_pieces(cube_with_satellite, 0.0)
    assert out is cube_with_satellite


def test_two_equal_cubes_both_survive():
    m = concatenate([box(), box(origin=(3, 0, 0))])
    joint = aabb_diagonal(m.vertices)
    diams = [c.diameter for c in connected_components(m)]
    assert joint == pytest.approx(math.sqrt(18))
    assert all(d > 0.05 * joint for d in diams)
    out = remove_isolated_pieces(m, 0.05)
    assert out.n_triangles == 24


def test_cleanup_empty_mesh_unchanged():
    empty = TriangleMesh(np.empty((0, 3)), np.empty((0, 3)))
    assert remove_isolated_pieces(empty, 0.05) is empty


def test_cleanup_rejects_bad_fraction(cube_with_satellite):
    with pytest.raises(InvalidInputError):
        remove_isolated_pieces(cube_with_satellite, 1.5)


def _tri_set(mesh):
    v = mesh.vertices
    return {tuple(sorted(tuple(v[i]) for i in t)) for t in mesh.triangles}


@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_cleanup_idempotent(n, seed, f):
    m = random_scene(np.random.default_rng(seed), n)
    once = remove_isolated_pieces(m, f)
    twice = remove_isolated_pieces(once, f)
    np.testing.assert_array_equal(once.vertices, twice.vertices)
    np.testing.assert_array_equal(once.triangles, twice.triangles)


@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_cleanup_monotone(n, seed, f1, f2):
    lo, hi = sorted((f1, f2))
    m = random_scene(np.random.default_rng(seed), n)
    assert _tri_set(remove_isolated_pieces(m, hi)) <= _tri_set(remove_isolated_pieces(m, lo))


# --- volume ------------------------------------------------------------------

def test_unit_cube_volume_exact():
    assert mesh_volume(box()) == 1.0


def test_tetrahedron_volume():
    assert mesh_volume(tetrahedron()) == pytest.approx(1 / 6, abs=1e-12)


def test_icosphere_volume_near_ball():
    v = mesh_volume(icosphere(3, 1.0))
    ball = 4 * math.pi / 3
    assert v < ball
    assert abs(v - ball) / ball < 0.02


def test_orientation_flip_keeps_absolute_volume():
    m = box()
    flipped = m.replace(triangles=m.triangles[:, ::-1])
    assert signed_volume(flipped) == -1.0
    assert mesh_volume(flipped) == 1.0


def test_empty_volume_zero():
    assert mesh_volume(TriangleMesh(np.empty((0, 3)), np.empty((0, 3)))) == 0.0


def test_boundary_edges():
    assert boundary_edge_count(box()) == 0
    open_box = box().replace(triangles=box().triangles[:-2])
    assert boundary_edge_count(open_box) == 4


def test_translation_invariance(rng):
    for _ in range(20):
        m = jittered_sphere(rng)
        v0 = mesh_volume(m)
        v1 = mesh_volume(translate_mesh(m, rng.uniform(-100, 100, size=3)))
        assert abs(v1 - v0) / v0 < 1e-9


# --- scaling -----------------------------------------------------------------

def test_scale_cube():
    assert mesh_volume(scale_mesh(box(), 2.0)) == pytest.approx(8.0, abs=1e-12)


def test_scale_identity():
    m = icosphere(1)
    np.testing.assert_array_equal(scale_mesh(m, 1.0).vertices, m.vertices)


def test_scale_tetrahedron():
    assert mesh_volume(scale_mesh(tetrahedron(), 0.1)) == pytest.approx(1 / 6 * 1e-3, rel=1e-12)


def test_scale_marks_metric():
    assert scale_mesh(box(), 0.5, metric=True).unit == "meters"
    assert scale_mesh(box(), 0.5).unit == "unitless"


@pytest.mark.parametrize("s", [0.0, -1.0])
def test_scale_rejects_nonpositive(s):
    with pytest.raises(InvalidInputError):
        scale_mesh(box(), s)


def test_scaling_law_random(rng):
    for _ in range(100):
        m = jittered_sphere(rng)
        s = float(np.exp(rng.uniform(np.log(0.01), np.log(100))))
        v = mesh_volume(m)
        assert abs(mesh_volume(scale_mesh(m, s)) - s ** 3 * v) <= 1e-9 * s ** 3 * v
