"""Ray-triangle intersection (Moller-Trumbore) and cone ray casting.

The batched caster is exhaustive over the faces it is given; the only
acceleration used anywhere is conservative face prefiltering, so results
are identical to a full scan by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh
from .transforms import Pose

__all__ = [
    "Ray",
    "Hit",
    "intersect",
    "first_hit",
    "first_hits",
    "sample_cone_directions",
    "faces_possibly_in_cone",
]

T_EPS = 1e-9  # minimum hit distance along the ray, mm
T_TIE = 1e-9  # hits closer than this in t are tied; lowest face index wins
_DET_EPS = 1e-12  # rays this close to parallel report no hit
_RAY_CHUNK = 2_000_000  # max ray*face pairs per batch, keeps temporaries ~100 MB


@dataclass(frozen=True)
class Ray:
    """Origin (mm) and unit direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.array(self.origin, dtype=float).reshape(3)
        d = np.array(self.direction, dtype=float).reshape(3)
        n = np.linalg.norm(d)
        if n == 0 or not np.isfinite(n):
            raise ValueError("ray direction must be a nonzero finite vector")
        d = d / n
        o.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class Hit:
    face_index: int
    t: float  # distance along the ray, mm
    u: float  # barycentric coordinates of the hit point
    v: float


def _moller_trumbore(origins, dirs, a, b, c):
    """Batched intersection of R rays against F triangles.

    origins/dirs are (R, 3); a, b, c are (F, 3). Returns (t, u, v, ok)
    with shape (R, F). Backfaces are not culled.
    """
    e1 = b - a
    e2 = c - a
    o = origins[:, None, :]
    d = dirs[:, None, :]
    pvec = np.cross(d, e2[None, :, :])
    det = np.einsum("rfk,fk->rf", pvec, e1)
    ok = np.abs(det) > _DET_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = np.where(ok, 1.0 / det, 0.0)
    tvec = o - a[None, :, :]
    u = np.einsum("rfk,rfk->rf", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1[None, :, :])
    v = np.einsum("rfk,rfk->rf", d, qvec) * inv_det
    t = np.einsum("rfk,fk->rf", qvec, e2) * inv_det
    ok &= (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > T_EPS)
    return t, u, v, ok


def intersect(ray: Ray, mesh: TriMesh, face: int) -> Hit | None:
    """Single ray against one (non-degenerate) face; backface hits count."""
    if mesh.degenerate[face]:
        raise ValueError(f"face {face} is degenerate")
    a, b, c = (mesh.vertices[mesh.faces[face, i]][None, :] for i in range(3))
    t, u, v, ok = _moller_trumbore(ray.origin[None, :], ray.direction[None, :], a, b, c)
    if not ok[0, 0]:
        return None
    return Hit(face, float(t[0, 0]), float(u[0, 0]), float(v[0, 0]))


def first_hits(
    origins: np.ndarray,
    dirs: np.ndarray,
    mesh: TriMesh,
    face_subset: np.ndarray | None = None,
    max_range: float = np.inf,
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest hit per ray over the given faces (all by default).

    Returns (face, t) arrays of length R; face is -1 where a ray misses.
    Ties within ``T_TIE`` in t resolve to the lowest face index. Degenerate
    faces never hit.

    When all rays share one origin the faces are scanned in blocks ordered
    by a conservative distance lower bound, and rays whose tie window can
    no longer be entered are dropped; the winners are identical to the
    plain full scan.
    """
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
    if face_subset is None:
        face_ids = np.flatnonzero(~mesh.degenerate)
    else:
        face_ids = np.asarray(face_subset, dtype=np.int64)
        face_ids = face_ids[~mesh.degenerate[face_ids]]
        face_ids = np.sort(face_ids)
    nr = len(origins)
    out_face = np.full(nr, -1, dtype=np.int64)
    out_t = np.full(nr, np.inf)
    if len(face_ids) == 0 or nr == 0:
        return out_face, out_t
    common_origin = nr > 1 and not np.ptp(origins, axis=0).any()
    if common_origin:
        return _first_hits_blocked(origins, dirs, mesh, face_ids, max_range)
    a, b, c = mesh.triangles(face_ids)
    chunk = max(1, _RAY_CHUNK // len(face_ids))
    for lo in range(0, nr, chunk):
        hi = min(nr, lo + chunk)
        t, _, _, ok = _moller_trumbore(origins[lo:hi], dirs[lo:hi], a, b, c)
        t = np.where(ok, t, np.inf)
        tmin = t.min(axis=1)
        hit_rows = np.isfinite(tmin) & (tmin <= max_range)
        if not hit_rows.any():
            continue
        # lowest face index among hits tied with the minimum t
        tied = t[hit_rows] <= (tmin[hit_rows, None] + T_TIE)
        cols = np.where(tied, np.arange(len(face_ids))[None, :], len(face_ids))
        best = cols.min(axis=1)
        rows = np.flatnonzero(hit_rows) + lo
        out_face[rows] = face_ids[best]
        out_t[rows] = t[hit_rows, best]
    return out_face, out_t


_BLOCK_FACES = 512


def _first_hits_blocked(origins, dirs, mesh, face_ids, max_range):
    """Common-origin scan in distance-ordered face blocks.

    Per ray it tracks the running minimum t and keeps every (t, face)
    whose t falls within T_TIE of that minimum at the time the face is
    seen; since the minimum only decreases, the final tie window is a
    subset of what was kept, so the final filter + lowest-face-index
    pick reproduces the full-scan answer exactly.
    """
    nr = len(origins)
    out_face = np.full(nr, -1, dtype=np.int64)
    out_t = np.full(nr, np.inf)
    apex = origins[0]
    dist = np.linalg.norm(mesh.face_centroids[face_ids] - apex, axis=1)
    tlow = np.maximum(dist - mesh.face_bound_radii[face_ids], 0.0)
    order = np.argsort(tlow, kind="stable")
    face_ids = face_ids[order]
    tlow = tlow[order]
    a, b, c = mesh.triangles(face_ids)

    best = np.full(nr, np.inf)
    alive = np.arange(nr)
    cand_ray: list[np.ndarray] = []
    cand_t: list[np.ndarray] = []
    cand_face: list[np.ndarray] = []
    for lo in range(0, len(face_ids), _BLOCK_FACES):
        bmin = tlow[lo]
        if np.isfinite(max_range) and bmin > max_range + T_TIE:
            break
        alive = alive[best[alive] + T_TIE >= bmin]
        if len(alive) == 0:
            break
        hi = min(len(face_ids), lo + _BLOCK_FACES)
        t, _, _, ok = _moller_trumbore(origins[alive], dirs[alive], a[lo:hi], b[lo:hi], c[lo:hi])
        t = np.where(ok, t, np.inf)
        new_best = np.minimum(best[alive], t.min(axis=1))
        best[alive] = new_best
        row, col = np.nonzero(np.isfinite(t) & (t <= new_best[:, None] + T_TIE))
        if len(row):
            cand_ray.append(alive[row])
            cand_t.append(t[row, col])
            cand_face.append(face_ids[lo + col])
    if not cand_ray:
        return out_face, out_t
    r = np.concatenate(cand_ray)
    t = np.concatenate(cand_t)
    f = np.concatenate(cand_face)
    keep = (t <= best[r] + T_TIE) & (best[r] <= max_range)
    r, t, f = r[keep], t[keep], f[keep]
    if len(r) == 0:
        return out_face, out_t
    # lowest face index within each ray's tie window
    first = np.lexsort((f, r))
    lead = np.ones(len(first), dtype=bool)
    lead[1:] = r[first][1:] != r[first][:-1]
    pick = first[lead]
    out_face[r[pick]] = f[pick]
    out_t[r[pick]] = t[pick]
    return out_face, out_t


def first_hit(ray: Ray, mesh: TriMesh) -> Hit | None:
    """Nearest hit of one ray over the whole mesh."""
    if mesh.num_faces == 0:
        raise ValueError("mesh has no faces")
    face, t = first_hits(ray.origin[None, :], ray.direction[None, :], mesh)
    if face[0] < 0:
        return None
    hit = intersect(ray, mesh, int(face[0]))
    assert hit is not None
    return hit


def sample_cone_directions(n: int, half_angle: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` unit directions uniform over the solid angle of a cone.

    The cone is about +z with the given half-angle. Draws a single
    (n, 2) uniform block so that for a fixed generator state the first
    n directions of a larger batch are identical (seed-extension).
    """
    if n < 1:
        raise ValueError("need at least one ray")
    if not 0 < half_angle <= np.pi:
        raise ValueError(f"half_angle out of range: {half_angle}")
    uv = rng.random((n, 2))
    cos_t = 1.0 - uv[:, 0] * (1.0 - np.cos(half_angle))
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t**2))
    phi = 2.0 * np.pi * uv[:, 1]
    return np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t])


def faces_possibly_in_cone(
    mesh: TriMesh,
    apex: np.ndarray,
    axis: np.ndarray,
    half_angle: float,
    max_range: float = np.inf,
) -> np.ndarray:
    """Conservative prefilter: faces whose bounding sphere touches the cone.

    Never culls a face any ray inside the cone could hit (the sphere seen
    from the apex subtends at most asin(r/d), so a sphere whose center
    direction is further than half_angle + asin(r/d) off axis is safely
    outside). Returned indices are sorted.
    """
    cen = mesh.face_centroids
    rad = mesh.face_bound_radii
    d = cen - apex
    dist = np.linalg.norm(d, axis=1)
    enclosing = dist <= rad  # apex inside the bounding sphere: keep
    with np.errstate(invalid="ignore", divide="ignore"):
        cosb = np.clip(np.einsum("fk,k->f", d, axis) / dist, -1.0, 1.0)
    beta = np.arccos(cosb)
    slack = np.arcsin(np.clip(rad / np.maximum(dist, 1e-300), 0.0, 1.0))
    keep = enclosing | (beta <= half_angle + slack)
    if np.isfinite(max_range):
        keep &= dist - rad <= max_range
    keep &= ~mesh.degenerate
    return np.flatnonzero(keep)


_WEDGE_RAYS = 64  # target rays per azimuthal wedge


def cast_cone(
    pose: Pose,
    mesh: TriMesh,
    n_rays: int,
    half_angle: float,
    rng: np.random.Generator,
    max_range: float = np.inf,
    prefilter: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Cast a cone of rays from a pose's origin about its +z axis.

    Returns (faces, counts): the unique struck face indices (sorted) and
    the number of rays that struck each. The conservative prefilter does
    not change the result, only the cost.
    """
    local = sample_cone_directions(n_rays, half_angle, rng)
    dirs = local @ pose.rotation.T
    origins = np.broadcast_to(pose.translation, dirs.shape)
    subset = None
    if prefilter:
        subset = faces_possibly_in_cone(mesh, pose.translation, pose.z_axis, half_angle, max_range)
        if len(subset) == 0:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        n_wedges = min(16, n_rays // _WEDGE_RAYS)
        if n_wedges >= 2 and len(subset) >= _BLOCK_FACES:
            face = _cast_wedged(pose, mesh, local, dirs, origins, subset, max_range, n_wedges)
            face = face[face >= 0]
            return np.unique(face, return_counts=True)
    face, _ = first_hits(origins, dirs, mesh, face_subset=subset, max_range=max_range)
    face = face[face >= 0]
    return np.unique(face, return_counts=True)


def _cast_wedged(pose, mesh, local, dirs, origins, subset, max_range, n_wedges):
    """Split a cone cast into azimuthal wedges around its axis.

    A ray from the apex keeps one azimuth in the cone frame; a face's
    bounding sphere at perpendicular distance rho from the axis spans at
    most asin(r / rho) of azimuth either way (everything if it touches
    the axis), so testing each ray only against the faces whose span
    overlaps its wedge reproduces the full scan result.
    """
    apex = pose.translation
    ray_az = np.arctan2(local[:, 1], local[:, 0])
    v = (mesh.face_centroids[subset] - apex) @ pose.rotation
    rad = mesh.face_bound_radii[subset]
    rho = np.hypot(v[:, 0], v[:, 1])
    face_az = np.arctan2(v[:, 1], v[:, 0])
    with np.errstate(invalid="ignore"):
        span = np.where(rho > rad, np.arcsin(np.minimum(rad / np.maximum(rho, 1e-300), 1.0)), np.pi)
    width = 2.0 * np.pi / n_wedges
    out = np.full(len(dirs), -1, dtype=np.int64)
    for k in range(n_wedges):
        lo = -np.pi + k * width
        center = lo + 0.5 * width
        rays_k = np.flatnonzero((ray_az >= lo) & (ray_az < lo + width))
        if len(rays_k) == 0:
            continue
        # wrapped angular distance from face center to wedge center
        delta = np.abs(np.angle(np.exp(1j * (face_az - center))))
        faces_k = subset[delta <= span + 0.5 * width]
        if len(faces_k) == 0:
            continue
        face, _ = first_hits(origins[rays_k], dirs[rays_k], mesh, face_subset=faces_k, max_range=max_range)
        out[rays_k] = face
    return out
