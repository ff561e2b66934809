"""Tests for exact capsule/mesh distance predicates and the face grid."""

import numpy as np
import pytest

from steerfiber import TriMesh, collision_free
from steerfiber.collision import (
    FaceGrid,
    point_segment_distance,
    point_triangle_distance,
    segment_segment_distance,
    segment_triangle_distance,
)

from _oracles import (
    point_triangle_dist,
    random_mesh,
    segment_segment_dist,
    segment_triangle_dist,
)


def _soup_mesh(rng, n_faces, lo, hi, max_edge):
    soup = random_mesh(rng, n_faces, lo=lo, hi=hi, max_edge=max_edge)
    faces = np.arange(3 * n_faces).reshape(n_faces, 3)
    return TriMesh(soup.reshape(-1, 3), faces)


def test_point_segment_hand_cases():
    q0 = np.array([0.0, 0.0, 0.0])
    q1 = np.array([4.0, 0.0, 0.0])
    assert point_segment_distance([2.0, 3.0, 0.0], q0, q1) == pytest.approx(3.0)
    assert point_segment_distance([-3.0, 4.0, 0.0], q0, q1) == pytest.approx(5.0)
    assert point_segment_distance([7.0, 0.0, 4.0], q0, q1) == pytest.approx(5.0)
    # degenerate segment collapses to a point
    assert point_segment_distance([1.0, 1.0, 1.0], q0, q0) == pytest.approx(np.sqrt(3))


def test_segment_segment_hand_cases():
    # parallel with unit offset
    d = segment_segment_distance(
        [0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [4.0, 1.0, 0.0]
    )
    assert d == pytest.approx(1.0)
    # perpendicular skew pair
    d = segment_segment_distance(
        [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, -1.0, 1.0], [0.0, 1.0, 1.0]
    )
    assert d == pytest.approx(1.0)
    # crossing segments touch
    d = segment_segment_distance(
        [-1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 1.0, 0.0], [1.0, -1.0, 0.0]
    )
    assert d == pytest.approx(0.0, abs=1e-12)
    # both degenerate: plain point distance
    p = np.array([1.0, 2.0, 2.0])
    z = np.zeros(3)
    assert segment_segment_distance(p, p, z, z) == pytest.approx(3.0)


def test_segment_segment_matches_minimizer():
    rng = np.random.default_rng(42)
    for _ in range(150):
        p0, p1, q0, q1 = rng.uniform(-5, 5, size=(4, 3))
        got = segment_segment_distance(p0, p1, q0, q1)
        ref = segment_segment_dist(p0, p1, q0, q1)
        assert got == pytest.approx(ref, abs=1e-7)


def test_point_triangle_hand_cases():
    a = np.array([0.0, 0.0, 0.0])
    b = np.array([4.0, 0.0, 0.0])
    c = np.array([0.0, 4.0, 0.0])
    # straight above the interior: plane distance
    assert point_triangle_distance([1.0, 1.0, 2.0], a, b, c) == pytest.approx(2.0)
    # beyond an edge: edge distance
    assert point_triangle_distance([2.0, -3.0, 0.0], a, b, c) == pytest.approx(3.0)
    # beyond a vertex
    assert point_triangle_distance([-3.0, -4.0, 0.0], a, b, c) == pytest.approx(5.0)
    # on the surface
    assert point_triangle_distance([1.0, 1.0, 0.0], a, b, c) == pytest.approx(0.0)


def test_point_triangle_matches_minimizer():
    rng = np.random.default_rng(17)
    for _ in range(150):
        a, b, c, p = rng.uniform(-5, 5, size=(4, 3))
        got = point_triangle_distance(p, a, b, c)
        ref = point_triangle_dist(p, a, b, c)
        assert got == pytest.approx(ref, abs=1e-7)


def test_degenerate_triangle_falls_back_to_edges():
    # collinear "triangle": distance must equal the nearest edge distance
    a = np.array([0.0, 0.0, 0.0])
    b = np.array([2.0, 0.0, 0.0])
    c = np.array([4.0, 0.0, 0.0])
    assert point_triangle_distance([1.0, 0.0, 3.0], a, b, c) == pytest.approx(3.0)
    d = segment_triangle_distance(
        np.array([1.0, -1.0, 2.0]), np.array([1.0, 1.0, 2.0]), a, b, c
    )
    assert d == pytest.approx(2.0)


def test_segment_triangle_hand_cases():
    a = np.array([0.0, 0.0, 0.0])
    b = np.array([4.0, 0.0, 0.0])
    c = np.array([0.0, 4.0, 0.0])
    # piercing segment
    d = segment_triangle_distance(
        np.array([1.0, 1.0, -1.0]), np.array([1.0, 1.0, 1.0]), a, b, c
    )
    assert d == 0.0
    # parallel above the plane
    d = segment_triangle_distance(
        np.array([0.5, 0.5, 1.5]), np.array([1.5, 1.5, 1.5]), a, b, c
    )
    assert d == pytest.approx(1.5)
    # stops short of the plane
    d = segment_triangle_distance(
        np.array([1.0, 1.0, 5.0]), np.array([1.0, 1.0, 2.0]), a, b, c
    )
    assert d == pytest.approx(2.0)


def test_segment_triangle_matches_minimizer():
    rng = np.random.default_rng(23)
    checked = 0
    for _ in range(150):
        a, b, c, p0, p1 = rng.uniform(-5, 5, size=(5, 3))
        got = segment_triangle_distance(p0, p1, a, b, c)
        ref = segment_triangle_dist(p0, p1, a, b, c)
        if got == 0.0:
            # piercing: the minimizer must agree there is contact
            assert ref == pytest.approx(0.0, abs=1e-5)
        else:
            assert got == pytest.approx(ref, abs=1e-7)
            checked += 1
    assert checked > 50


def test_face_grid_query_is_conservative():
    rng = np.random.default_rng(5)
    mesh = _soup_mesh(rng, 120, -20, 20, 6)
    grid = FaceGrid(mesh)
    A, B, C = mesh.triangles()
    for _ in range(40):
        p0, p1 = rng.uniform(-22, 22, size=(2, 3))
        radius = rng.uniform(0.1, 5.0)
        cand = set(grid.query(p0, p1, radius))
        dists = segment_triangle_distance(p0, p1, A, B, C)
        within = np.flatnonzero(dists <= radius)
        missed = [f for f in within if f not in cand]
        assert not missed


def test_face_grid_pairs_are_unique():
    rng = np.random.default_rng(9)
    mesh = _soup_mesh(rng, 60, -10, 10, 8)
    grid = FaceGrid(mesh)
    p0s = rng.uniform(-12, 12, size=(10, 3))
    p1s = rng.uniform(-12, 12, size=(10, 3))
    si, fi = grid.query_segments(p0s, p1s, 2.0)
    pairs = list(zip(si.tolist(), fi.tolist()))
    assert len(pairs) == len(set(pairs))


def _brute_force_free(backbones, mesh, clearance):
    A, B, C = mesh.triangles()
    for points, body_radius in backbones:
        points = np.asarray(points, dtype=float)
        for i in range(len(points) - 1):
            d = segment_triangle_distance(points[i], points[i + 1], A, B, C)
            if np.any(d <= body_radius + clearance):
                return False
    return True


def test_collision_free_matches_brute_force():
    rng = np.random.default_rng(31)
    mesh = _soup_mesh(rng, 80, -15, 15, 7)
    grid = FaceGrid(mesh)
    agree_free = agree_hit = 0
    for _ in range(60):
        n_pts = rng.integers(2, 5)
        pts = rng.uniform(-16, 16, size=(n_pts, 3))
        radius = rng.uniform(0.05, 2.0)
        clearance = rng.uniform(0.0, 0.5)
        chains = [(pts, radius)]
        got = collision_free(chains, mesh, clearance=clearance, grid=grid)
        ref = _brute_force_free(chains, mesh, clearance)
        assert got == ref
        agree_free += got
        agree_hit += not got
    # the trial mix must exercise both outcomes
    assert agree_free > 5 and agree_hit > 5


def test_collision_free_touching_counts_as_hit():
    tri = TriMesh([[0, 0, 0], [4, 0, 0], [0, 4, 0]], [[0, 1, 2]])
    path = np.array([[1.0, 1.0, 2.0], [1.0, 1.0, 3.0]])
    assert collision_free([(path, 1.0)], tri)
    assert not collision_free([(path, 2.0)], tri)  # exact contact
    assert not collision_free([(path, 1.0)], tri, clearance=1.5)


def test_collision_free_validates_clearance():
    tri = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    with pytest.raises(ValueError):
        collision_free([], tri, clearance=-0.1)


def test_collision_free_empty_inputs():
    tri = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    assert collision_free([], tri)
    path = np.array([[0.0, 0.0, 5.0], [0.0, 0.0, 6.0]])
    assert collision_free([(path, 10.0)], empty)


def test_grid_reuse_matches_fresh_grid():
    rng = np.random.default_rng(13)
    mesh = _soup_mesh(rng, 50, -10, 10, 6)
    grid = FaceGrid(mesh)
    for _ in range(20):
        pts = rng.uniform(-11, 11, size=(3, 3))
        r = rng.uniform(0.1, 1.5)
        assert collision_free([(pts, r)], mesh, grid=grid) == collision_free(
            [(pts, r)], mesh
        )
