"""Independent reference implementations used to cross-check the package.

Each oracle solves the same problem as the library code through a
different route (plane/barycentric instead of Moller-Trumbore, scipy
expm instead of closed-form Rodrigues, constrained optimization instead
of closed-form clamping), so agreement is evidence of correctness rather
than repetition.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.optimize


def ray_triangle_plane(origin, direction, a, b, c):
    """Ray-triangle test via plane intersection plus barycentric solve.

    Returns (hit, t, margin) where margin is the distance of the
    barycentric coordinates from the triangle boundary; callers should
    only trust comparisons when the margin is comfortably positive.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    a = np.asarray(a, dtype=float)
    e1 = np.asarray(b, dtype=float) - a
    e2 = np.asarray(c, dtype=float) - a
    n = np.cross(e1, e2)
    denom = float(n @ direction)
    if denom == 0.0:
        return False, np.inf, -np.inf
    t = float(n @ (a - origin)) / denom
    p = origin + t * direction - a
    # solve p = u*e1 + v*e2 in the triangle plane by least squares
    m = np.column_stack([e1, e2])
    uv, *_ = np.linalg.lstsq(m, p, rcond=None)
    u, v = float(uv[0]), float(uv[1])
    margin = min(u, v, 1.0 - u - v)
    hit = t > 0.0 and margin >= 0.0
    return hit, t, margin


def first_hit_scan(origin, direction, mesh, t_eps=1e-9, t_tie=1e-9, max_range=np.inf):
    """First struck face by brute force over every face of the mesh.

    Uses the plane/barycentric test above; ties within t_tie of the
    minimum resolve to the lowest face index. Returns (face, t) or
    (-1, inf).
    """
    best_t = np.inf
    hits = []
    va, vb, vc = mesh.triangles()
    for i in range(mesh.num_faces):
        ok, t, _ = ray_triangle_plane(origin, direction, va[i], vb[i], vc[i])
        if ok and t >= t_eps:
            hits.append((t, i))
            best_t = min(best_t, t)
    if not hits or best_t > max_range:
        return -1, np.inf
    tied = [(i, t) for t, i in hits if t <= best_t + t_tie]
    face, t = min(tied)
    return face, t


def expm_pose(v, w, length):
    """SE(3) exponential via scipy.linalg.expm of the 4x4 twist matrix."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    xi = np.zeros((4, 4))
    xi[:3, :3] = np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )
    xi[:3, 3] = v
    return scipy.linalg.expm(xi * length)


def planar_arc_matrix(angle, arc_len):
    """4x4 pose of a circular arc in the x-z plane, built from the
    classic closed form: start at the origin heading +z, bend toward +x.
    """
    m = np.eye(4)
    c, s = np.cos(angle), np.sin(angle)
    m[:3, :3] = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if angle == 0.0:
        m[2, 3] = arc_len
    else:
        rho = arc_len / angle
        m[0, 3] = rho * (1.0 - np.cos(angle))
        m[2, 3] = rho * np.sin(angle)
    return m


def _min_dist_qp(objective, x0, bounds, constraints):
    res = scipy.optimize.minimize(
        objective,
        x0,
        method="SLSQP",
        bounds=bounds,
        constraints=constraints,
        options={"maxiter": 200, "ftol": 1e-16},
    )
    return float(np.sqrt(max(res.fun, 0.0)))


def point_triangle_dist(p, a, b, c):
    """Distance from a point to a triangle by constrained optimization.

    The squared distance is a convex quadratic over the barycentric
    simplex, so SLSQP from the best coarse-grid start finds the global
    minimum.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    e1 = np.asarray(b, dtype=float) - a
    e2 = np.asarray(c, dtype=float) - a

    def sq(x):
        q = a + x[0] * e1 + x[1] * e2
        d = q - p
        return float(d @ d)

    grid = [(u, v) for u in np.linspace(0, 1, 9) for v in np.linspace(0, 1, 9) if u + v <= 1.0]
    x0 = min(grid, key=sq)
    return _min_dist_qp(
        sq,
        x0,
        bounds=[(0.0, 1.0), (0.0, 1.0)],
        constraints=[{"type": "ineq", "fun": lambda x: 1.0 - x[0] - x[1]}],
    )


def segment_triangle_dist(p0, p1, a, b, c):
    """Distance between a segment and a triangle by constrained
    optimization over (segment parameter, barycentric pair)."""
    p0 = np.asarray(p0, dtype=float)
    seg = np.asarray(p1, dtype=float) - p0
    a = np.asarray(a, dtype=float)
    e1 = np.asarray(b, dtype=float) - a
    e2 = np.asarray(c, dtype=float) - a

    def sq(x):
        q = a + x[1] * e1 + x[2] * e2
        d = p0 + x[0] * seg - q
        return float(d @ d)

    grid = [
        (s, u, v)
        for s in np.linspace(0, 1, 7)
        for u in np.linspace(0, 1, 7)
        for v in np.linspace(0, 1, 7)
        if u + v <= 1.0
    ]
    x0 = min(grid, key=sq)
    return _min_dist_qp(
        sq,
        x0,
        bounds=[(0.0, 1.0)] * 3,
        constraints=[{"type": "ineq", "fun": lambda x: 1.0 - x[1] - x[2]}],
    )


def segment_segment_dist(p0, p1, q0, q1):
    """Distance between two segments by the same optimization route."""
    p0 = np.asarray(p0, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    dp = np.asarray(p1, dtype=float) - p0
    dq = np.asarray(q1, dtype=float) - q0

    def sq(x):
        d = (p0 + x[0] * dp) - (q0 + x[1] * dq)
        return float(d @ d)

    grid = [(s, t) for s in np.linspace(0, 1, 9) for t in np.linspace(0, 1, 9)]
    x0 = min(grid, key=sq)
    return _min_dist_qp(sq, x0, bounds=[(0.0, 1.0)] * 2, constraints=[])


def rigid_fit(src, dst):
    """Rigid transform by scipy's Wahba solver on centered point sets.

    Returns (rotation, translation) minimizing sum |R s + t - d|^2.
    """
    from scipy.spatial.transform import Rotation

    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    rot, _ = Rotation.align_vectors(dst - cd, src - cs)
    r = rot.as_matrix()
    return r, cd - r @ cs


def random_rotation(rng):
    """Uniform random rotation matrix from a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_mesh(rng, n_faces, lo=-50.0, hi=50.0, max_edge=12.0):
    """Random triangle soup: anchors uniform in a cube, the other two
    vertices within max_edge of the anchor. Returns an (n, 3, 3) array.
    """
    anchors = rng.uniform(lo, hi, size=(n_faces, 1, 3))
    offsets = rng.uniform(-max_edge, max_edge, size=(n_faces, 2, 3))
    return np.concatenate([anchors, anchors + offsets], axis=1)
