"""Capsule-vs-mesh collision tests for device backbones.

A device body is modeled as a chain of capsules: each backbone segment
inflated to the body radius plus a clearance margin. A chain is
collision-free when every segment keeps at least that distance from
every mesh triangle. Distances are exact (no point sampling): zero when
the segment pierces the triangle, otherwise the minimum over the three
segment/edge pairs and the two endpoint/triangle pairs.

A uniform spatial hash over face bounding boxes narrows the candidate
faces per segment; it only discards faces farther than the query radius,
so it never changes an answer.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriMesh

__all__ = [
    "point_segment_distance",
    "segment_segment_distance",
    "point_triangle_distance",
    "segment_triangle_distance",
    "FaceGrid",
    "collision_free",
]

_EPS = 1e-12


def point_segment_distance(p, q0, q1):
    """Distance from points p (..., 3) to segments [q0, q1] (..., 3)."""
    p = np.asarray(p, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d = q1 - q0
    dd = np.einsum("...k,...k->...", d, d)
    t = np.einsum("...k,...k->...", p - q0, d) / np.where(dd > _EPS, dd, 1.0)
    t = np.clip(np.where(dd > _EPS, t, 0.0), 0.0, 1.0)
    closest = q0 + t[..., None] * d
    return np.linalg.norm(p - closest, axis=-1)


def segment_segment_distance(p0, p1, q0, q1):
    """Distance between segments [p0, p1] and [q0, q1], broadcasting over
    leading dimensions. Clamped closest-point method."""
    p0, p1, q0, q1 = (np.asarray(x, dtype=float) for x in (p0, p1, q0, q1))
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum("...k,...k->...", d1, d1)
    e = np.einsum("...k,...k->...", d2, d2)
    f = np.einsum("...k,...k->...", d2, r)
    c = np.einsum("...k,...k->...", d1, r)
    b = np.einsum("...k,...k->...", d1, d2)
    denom = a * e - b * b
    safe = lambda num, den: num / np.where(np.abs(den) > _EPS, den, 1.0)

    s = np.where(np.abs(denom) > _EPS, np.clip(safe(b * f - c * e, denom), 0.0, 1.0), 0.0)
    t = safe(b * s + f, e)
    s = np.where(t < 0.0, np.clip(safe(-c, a), 0.0, 1.0), s)
    s = np.where(t > 1.0, np.clip(safe(b - c, a), 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)
    # degenerate segments collapse to points
    s = np.where(a > _EPS, s, 0.0)
    t_pt = np.clip(safe(f, e), 0.0, 1.0)
    t = np.where(a > _EPS, t, t_pt)
    t = np.where(e > _EPS, t, 0.0)
    s_pt = np.clip(safe(-c, a), 0.0, 1.0)
    s = np.where(e > _EPS, s, np.where(a > _EPS, s_pt, 0.0))
    c1 = p0 + s[..., None] * d1
    c2 = q0 + t[..., None] * d2
    return np.linalg.norm(c1 - c2, axis=-1)


def point_triangle_distance(p, a, b, c):
    """Distance from points p to triangles (a, b, c), broadcasting over
    leading dimensions. Degenerate triangles fall back to edge distances."""
    p, a, b, c = (np.asarray(x, dtype=float) for x in (p, a, b, c))
    v0 = b - a
    v1 = c - a
    v2 = p - a
    d00 = np.einsum("...k,...k->...", v0, v0)
    d01 = np.einsum("...k,...k->...", v0, v1)
    d11 = np.einsum("...k,...k->...", v1, v1)
    d20 = np.einsum("...k,...k->...", v2, v0)
    d21 = np.einsum("...k,...k->...", v2, v1)
    denom = d00 * d11 - d01 * d01
    ok = denom > _EPS
    inv = 1.0 / np.where(ok, denom, 1.0)
    v = (d11 * d20 - d01 * d21) * inv
    w = (d00 * d21 - d01 * d20) * inv
    inside = ok & (v >= 0.0) & (w >= 0.0) & (v + w <= 1.0)
    n = np.cross(v0, v1)
    nn = np.linalg.norm(n, axis=-1)
    plane = np.abs(np.einsum("...k,...k->...", v2, n)) / np.where(nn > _EPS, nn, 1.0)
    edge = np.minimum(
        point_segment_distance(p, a, b),
        np.minimum(point_segment_distance(p, b, c), point_segment_distance(p, c, a)),
    )
    return np.where(inside & (nn > _EPS), plane, edge)


def _segment_pierces(p0, p1, a, b, c):
    """Whether segment [p0, p1] intersects each triangle (strict interior
    of the plane crossing included; boundary contact is handled by the
    distance terms anyway)."""
    d = p1 - p0
    e1 = b - a
    e2 = c - a
    pvec = np.cross(d, e2)
    det = np.einsum("...k,...k->...", pvec, e1)
    ok = np.abs(det) > _EPS
    inv = 1.0 / np.where(ok, det, 1.0)
    tvec = p0 - a
    u = np.einsum("...k,...k->...", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = np.einsum("...k,...k->...", d, qvec) * inv
    t = np.einsum("...k,...k->...", qvec, e2) * inv
    return ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t >= 0.0) & (t <= 1.0)


def segment_triangle_distance(p0, p1, a, b, c):
    """Exact distance between segment [p0, p1] and triangles (a, b, c),
    broadcasting over leading dimensions; zero if they intersect."""
    p0, p1, a, b, c = (np.asarray(x, dtype=float) for x in (p0, p1, a, b, c))
    dist = np.minimum(
        np.minimum(
            segment_segment_distance(p0, p1, a, b),
            segment_segment_distance(p0, p1, b, c),
        ),
        segment_segment_distance(p0, p1, c, a),
    )
    dist = np.minimum(dist, point_triangle_distance(p0, a, b, c))
    dist = np.minimum(dist, point_triangle_distance(p1, a, b, c))
    return np.where(_segment_pierces(p0, p1, a, b, c), 0.0, dist)


class FaceGrid:
    """Uniform spatial hash over face bounding boxes.

    query(p0, p1, radius) returns every face whose bounding box cell
    range overlaps the inflated segment box: a superset of the faces
    within ``radius`` of the segment.
    """

    def __init__(self, mesh: TriMesh, cell_size: float | None = None):
        self.mesh = mesh
        if cell_size is None:
            rad = mesh.face_bound_radii
            cell_size = 4.0 * float(np.median(rad)) if len(rad) else 1.0
            cell_size = max(cell_size, 1e-6)
        self.cell = float(cell_size)
        a, b, c = mesh.triangles()
        lo = np.minimum(np.minimum(a, b), c)
        hi = np.maximum(np.maximum(a, b), c)
        self.origin = lo.min(axis=0) if len(lo) else np.zeros(3)
        ilo = np.floor((lo - self.origin) / self.cell).astype(np.int64)
        ihi = np.floor((hi - self.origin) / self.cell).astype(np.int64)
        buckets: dict[tuple[int, int, int], list[int]] = {}
        for f in range(mesh.num_faces):
            x0, y0, z0 = ilo[f]
            x1, y1, z1 = ihi[f]
            for ix in range(x0, x1 + 1):
                for iy in range(y0, y1 + 1):
                    for iz in range(z0, z1 + 1):
                        buckets.setdefault((ix, iy, iz), []).append(f)
        self._buckets = {k: np.array(v, dtype=np.int64) for k, v in buckets.items()}

    def query(self, p0: np.ndarray, p1: np.ndarray, radius: float) -> np.ndarray:
        si, fi = self.query_segments(p0[None, :], p1[None, :], radius)
        return np.unique(fi)

    def query_segments(
        self, p0s: np.ndarray, p1s: np.ndarray, radius: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Candidate (segment index, face index) pairs for a batch of
        segments, each inflated by ``radius``. Pairs are deduplicated."""
        lo = (np.minimum(p0s, p1s) - radius - self.origin) / self.cell
        hi = (np.maximum(p0s, p1s) + radius - self.origin) / self.cell
        ilo = np.floor(lo).astype(np.int64)
        ihi = np.floor(hi).astype(np.int64)
        seg_out: list[np.ndarray] = []
        face_out: list[np.ndarray] = []
        get = self._buckets.get
        for i in range(len(p0s)):
            x0, y0, z0 = ilo[i]
            x1, y1, z1 = ihi[i]
            for ix in range(x0, x1 + 1):
                for iy in range(y0, y1 + 1):
                    for iz in range(z0, z1 + 1):
                        faces = get((ix, iy, iz))
                        if faces is not None:
                            seg_out.append(np.full(len(faces), i, dtype=np.int64))
                            face_out.append(faces)
        if not seg_out:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        si = np.concatenate(seg_out)
        fi = np.concatenate(face_out)
        # a face box spanning several cells of one query appears repeatedly
        pair = np.unique(si * np.int64(self.mesh.num_faces) + fi)
        return pair // self.mesh.num_faces, pair % self.mesh.num_faces


def collision_free(
    backbones: list[tuple[np.ndarray, float]],
    mesh: TriMesh,
    clearance: float = 0.0,
    grid: FaceGrid | None = None,
) -> bool:
    """True iff every backbone stays clear of the mesh.

    ``backbones`` is a list of (points, body_radius) chains; each segment
    must keep a distance greater than body_radius + clearance from every
    triangle. An optional prebuilt FaceGrid avoids rebuilding the hash.
    """
    if clearance < 0:
        raise ValueError("clearance must be nonnegative")
    if mesh.num_faces == 0:
        return True
    if grid is None:
        grid = FaceGrid(mesh)
    centroids = mesh.face_centroids
    bound_radii = mesh.face_bound_radii
    for points, body_radius in backbones:
        points = np.asarray(points, dtype=float)
        radius = body_radius + clearance
        p0s, p1s = points[:-1], points[1:]
        si, fi = grid.query_segments(p0s, p1s, radius)
        if len(si) == 0:
            continue
        # cheap sphere-sphere lower bound culls most candidate pairs
        # before the exact segment-triangle distance
        mids = 0.5 * (p0s + p1s)
        half = 0.5 * np.linalg.norm(p1s - p0s, axis=1)
        lower = (
            np.linalg.norm(mids[si] - centroids[fi], axis=1)
            - half[si]
            - bound_radii[fi]
        )
        near = lower <= radius
        if not np.any(near):
            continue
        si, fi = si[near], fi[near]
        a, b, c = mesh.triangles(fi)
        d = segment_triangle_distance(p0s[si], p1s[si], a, b, c)
        if np.any(d <= radius):
            return False
    return True
