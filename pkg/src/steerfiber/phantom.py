"""Procedural larynx-like test cavity.

A flow-through airway cavity built from a radial profile r(z, phi),
+z pointing deeper, open at both ends:

  - a long narrow entry tube that guides the scope shaft,
  - a short funnel flaring into a wider vault (the working chamber
    where the protruding fiber moves),
  - a shelf formed by two medial fold lobes protruding from +-y, which
    leave a slit-shaped aperture long in x: an aligned fiber passes, a
    5 mm scope tip never reaches it,
  - the slit continues through a short cone into a distal tube that
    leaves the mesh open (pokes along the axis exit cleanly),
  - pocket recesses in the vault wall.

The proportions carry the workspace comparison. The entry tube is
barely wider than the scope shaft and longer than the articulated
section, so collisions pin the scope nearly straight regardless of the
commanded bend: the camera always looks down the chamber axis from the
tube mouth. From there the camera's wide field of view takes in the
vault walls, shelf, and floor, but a straight fiber's much narrower
beam cone only reaches the floor patch around the axis. A fiber that
can curl inside the vault paints the walls and shelf the camera is
already looking at. This mirrors the clinical layout of a scope seated
in a narrow inlet above a wider cavity.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import TriMesh, weld_vertices

__all__ = ["generate_phantom", "PHANTOM_DEFAULTS"]

PHANTOM_DEFAULTS = dict(
    entry_radius=4.75,
    entry_len=35.0,
    funnel_len=6.0,
    vault_radius=16.0,
    vault_len=17.0,
    shelf_len=3.0,
    slit_len=2.5,
    slit_half_len=8.0,
    slit_half_gap=4.0,
    cone_len=4.5,
    outlet_radius=5.0,
    outlet_len=6.0,
    pocket_count=6,
    pocket_depth=2.5,
    n_phi=64,
)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def generate_phantom(
    entry_radius: float = 4.75,
    entry_len: float = 35.0,
    funnel_len: float = 6.0,
    vault_radius: float = 16.0,
    vault_len: float = 17.0,
    shelf_len: float = 3.0,
    slit_len: float = 2.5,
    slit_half_len: float = 8.0,
    slit_half_gap: float = 4.0,
    cone_len: float = 4.5,
    outlet_radius: float = 5.0,
    outlet_len: float = 6.0,
    pocket_count: int = 6,
    pocket_depth: float = 2.5,
    n_phi: int = 64,
) -> TriMesh:
    """Build the cavity mesh (mm). See module docstring for the layout.

    The fold aperture is a flat superellipse with half-axes
    (slit_half_len, slit_half_gap); defaults pass a 1.1 mm fiber that
    is roughly axis-aligned and block everything wider.
    """
    if min(entry_radius, entry_len, funnel_len, vault_len, shelf_len) <= 0:
        raise ValueError("phantom lengths must be positive")
    if min(slit_len, cone_len, outlet_radius, outlet_len) <= 0:
        raise ValueError("phantom lengths must be positive")
    if not 0 < slit_half_gap < slit_half_len < vault_radius:
        raise ValueError("need 0 < slit_half_gap < slit_half_len < vault_radius")
    if entry_radius >= vault_radius:
        raise ValueError("vault must be wider than the entry tube")
    if n_phi < 8:
        raise ValueError("need at least 8 points per ring")
    if pocket_count < 0 or pocket_depth < 0:
        raise ValueError("pocket_count and pocket_depth must be nonnegative")

    z_funnel = entry_len
    z_vault = z_funnel + funnel_len
    z_shelf = z_vault + vault_len
    z_slit = z_shelf + shelf_len
    z_cone = z_slit + slit_len
    z_outlet = z_cone + cone_len
    z_end = z_outlet + outlet_len

    def slit_profile(phi: np.ndarray) -> np.ndarray:
        # superellipse aperture between the fold lobes, long axis x
        cx = np.abs(np.cos(phi)) / slit_half_len
        sy = np.abs(np.sin(phi)) / slit_half_gap
        return (cx**4 + sy**4) ** -0.25

    def radius(z: float, phi: np.ndarray) -> np.ndarray:
        if z <= z_funnel:
            r = np.full_like(phi, entry_radius)
        elif z <= z_vault:
            t = _smoothstep(np.array((z - z_funnel) / funnel_len))
            r = np.full_like(phi, entry_radius + (vault_radius - entry_radius) * float(t))
        elif z <= z_shelf:
            r = np.full_like(phi, vault_radius)
        elif z <= z_slit:
            t = float(_smoothstep(np.array((z - z_shelf) / shelf_len)))
            r = vault_radius * (1.0 - t) + slit_profile(phi) * t
        elif z <= z_cone:
            r = slit_profile(phi)
        elif z <= z_outlet:
            t = float(_smoothstep(np.array((z - z_cone) / cone_len)))
            r = slit_profile(phi) * (1.0 - t) + outlet_radius * t
        else:
            r = np.full_like(phi, outlet_radius)
        if pocket_count > 0 and z_vault - 2.0 < z < z_shelf + 1.0:
            zc = z_shelf - 7.0
            for k in range(pocket_count):
                pk = 2.0 * math.pi * (k + 0.5) / pocket_count
                dphi = np.angle(np.exp(1j * (phi - pk)))
                bump = pocket_depth * math.exp(-0.5 * ((z - zc) / 2.5) ** 2)
                r = r + bump * np.exp(-0.5 * (dphi / 0.35) ** 2)
        return r

    # z rows, denser where the profile changes quickly
    rows: list[float] = []
    for z0, z1, count in (
        (0.0, z_funnel, 6),
        (z_funnel, z_vault, 6),
        (z_vault, z_shelf, 12),
        (z_shelf, z_slit, 6),
        (z_slit, z_cone, 3),
        (z_cone, z_outlet, 4),
        (z_outlet, z_end, 3),
    ):
        rows.extend(np.linspace(z0, z1, count + 1)[:-1])
    rows.append(z_end)
    z_rows = np.array(rows)

    phi = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    rings = []
    for z in z_rows:
        r = radius(float(z), phi)
        rings.append(np.column_stack([r * np.cos(phi), r * np.sin(phi), np.full(n_phi, z)]))
    verts = np.vstack(rings)

    faces = []
    nz = len(z_rows)
    for i in range(nz - 1):
        for j in range(n_phi):
            a = i * n_phi + j
            b = i * n_phi + (j + 1) % n_phi
            c = (i + 1) * n_phi + j
            d = (i + 1) * n_phi + (j + 1) % n_phi
            faces.append((a, c, b))
            faces.append((b, c, d))

    welded, inverse = weld_vertices(verts)
    return TriMesh(welded, inverse[np.array(faces, dtype=np.int64)])
