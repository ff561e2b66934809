"""Indexed triangle meshes and STL/PLY file I/O.

All coordinates are millimeters. STL files carry no unit metadata; they
are assumed to be in mm (the CLI has a ``--scale`` flag for meshes that
are not).
"""

from __future__ import annotations

import re
import struct
from functools import cached_property

import numpy as np

__all__ = [
    "TriMesh",
    "MeshFormatError",
    "load_mesh",
    "save_stl",
    "save_colored_ply",
    "load_ply",
]

WELD_TOL = 1e-6  # vertex weld tolerance, mm
DEGENERATE_AREA = 1e-12  # faces below this area (mm^2) are excluded from queries

# per-face colors for reachability labels written to PLY
LABEL_COLORS = {False: (160, 160, 160), True: (40, 200, 70)}


class MeshFormatError(ValueError):
    """Raised for malformed mesh files; carries the failing byte offset."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class TriMesh:
    """Immutable indexed triangle mesh with per-face areas and normals.

    Degenerate faces (area < 1e-12 mm^2) are kept in the index but
    flagged, and every intersection/distance query skips them.
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray):
        v = np.ascontiguousarray(np.asarray(vertices, dtype=float).reshape(-1, 3))
        f = np.ascontiguousarray(np.asarray(faces, dtype=np.int64).reshape(-1, 3))
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError(
                f"face index out of range: [{f.min()}, {f.max()}] for {len(v)} vertices"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite vertex coordinates")
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f

        a, b, c = (v[f[:, i]] for i in range(3))
        cross = np.cross(b - a, c - a)
        norm = np.linalg.norm(cross, axis=1)
        self.face_areas = 0.5 * norm
        self.degenerate = self.face_areas < DEGENERATE_AREA
        with np.errstate(invalid="ignore", divide="ignore"):
            normals = cross / norm[:, None]
        normals[self.degenerate] = 0.0
        self.face_normals = normals
        for arr in (self.face_areas, self.degenerate, self.face_normals):
            arr.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    def triangles(self, face_indices=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Corner coordinate arrays (each (F,3)) for the given faces."""
        f = self.faces if face_indices is None else self.faces[face_indices]
        return self.vertices[f[:, 0]], self.vertices[f[:, 1]], self.vertices[f[:, 2]]

    @cached_property
    def face_centroids(self) -> np.ndarray:
        a, b, c = self.triangles()
        out = (a + b + c) / 3.0
        out.setflags(write=False)
        return out

    @cached_property
    def face_bound_radii(self) -> np.ndarray:
        """Radius of a bounding sphere per face, centered on the centroid."""
        cen = self.face_centroids
        a, b, c = self.triangles()
        r = np.maximum(
            np.linalg.norm(a - cen, axis=1),
            np.maximum(np.linalg.norm(b - cen, axis=1), np.linalg.norm(c - cen, axis=1)),
        )
        r.setflags(write=False)
        return r

    def scaled(self, factor: float) -> "TriMesh":
        return TriMesh(self.vertices * factor, self.faces)


def weld_vertices(points: np.ndarray, tol: float = WELD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Merge points that coincide within ``tol`` (grid quantization).

    Returns (unique_points, inverse) with each unique point taken verbatim
    from its first occurrence, so exact duplicates weld with zero
    coordinate motion.
    """
    keys = np.round(np.asarray(points, dtype=float) / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return points[first], inverse


def _mesh_from_triangle_soup(tris: np.ndarray) -> TriMesh:
    pts = tris.reshape(-1, 3)
    verts, inverse = weld_vertices(pts)
    return TriMesh(verts, inverse.reshape(-1, 3))


_ASCII_FLOAT = rb"[-+0-9.eE]+"
_FACET_RE = re.compile(
    rb"facet\s+normal\s+" + rb"\s+".join([_ASCII_FLOAT] * 3)
    + rb"\s+outer\s+loop"
    + (rb"\s+vertex\s+(" + _ASCII_FLOAT + rb")\s+(" + _ASCII_FLOAT + rb")\s+(" + _ASCII_FLOAT + rb")") * 3
    + rb"\s+endloop\s+endfacet"
)


def _parse_stl_ascii(data: bytes) -> np.ndarray:
    tris = []
    pos = data.index(b"solid") + 5
    pos = data.find(b"\n", pos) + 1  # skip the name line
    while True:
        tail = data[pos:]
        stripped = tail.lstrip()
        offset = pos + (len(tail) - len(stripped))
        if stripped.startswith(b"endsolid") or not stripped:
            break
        m = _FACET_RE.match(data, offset)
        if m is None:
            raise MeshFormatError("malformed ASCII STL facet", offset)
        tris.append([float(g) for g in m.groups()])
        pos = m.end()
    return np.array(tris, dtype=float).reshape(-1, 3, 3)


def _parse_stl_binary(data: bytes) -> np.ndarray:
    if len(data) < 84:
        raise MeshFormatError("binary STL shorter than 84-byte header", len(data))
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise MeshFormatError(
            f"binary STL truncated: {count} facets need {expected} bytes, have {len(data)}",
            len(data),
        )
    raw = np.frombuffer(data, dtype=np.uint8, count=50 * count, offset=84)
    rec = raw.reshape(count, 50)[:, 12:48].copy()  # drop normal and attr bytes
    return rec.view("<f4").astype(float).reshape(-1, 3, 3)


def _looks_binary(data: bytes) -> bool:
    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            return True
    return not data.lstrip().startswith(b"solid")


def load_mesh(path, scale: float = 1.0) -> TriMesh:
    """Load an STL file (binary or ASCII, mm) into a welded TriMesh."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data:
        raise MeshFormatError("empty file", 0)
    tris = _parse_stl_binary(data) if _looks_binary(data) else _parse_stl_ascii(data)
    if len(tris) == 0:
        raise MeshFormatError("STL file contains no facets", len(data))
    if scale != 1.0:
        tris = tris * scale
    return _mesh_from_triangle_soup(tris)


def save_stl(mesh: TriMesh, path, binary: bool = True) -> None:
    """Write a mesh as STL (binary little-endian by default)."""
    a, b, c = mesh.triangles()
    n = mesh.face_normals
    if binary:
        count = mesh.num_faces
        rec = np.zeros(count, dtype=[("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])
        rec["n"] = n
        rec["v"][:, 0], rec["v"][:, 1], rec["v"][:, 2] = a, b, c
        with open(path, "wb") as fh:
            fh.write(b"steerfiber binary stl".ljust(80, b"\0"))
            fh.write(struct.pack("<I", count))
            fh.write(rec.tobytes())
    else:
        with open(path, "w") as fh:
            fh.write("solid steerfiber\n")
            for i in range(mesh.num_faces):
                fh.write(f"  facet normal {n[i,0]:.9g} {n[i,1]:.9g} {n[i,2]:.9g}\n")
                fh.write("    outer loop\n")
                for p in (a[i], b[i], c[i]):
                    fh.write(f"      vertex {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
                fh.write("    endloop\n  endfacet\n")
            fh.write("endsolid steerfiber\n")


def save_colored_ply(mesh: TriMesh, face_labels: np.ndarray, path) -> None:
    """Write an ASCII PLY with a per-face RGB channel encoding the labels.

    ``face_labels`` is a boolean array (True = reachable) of length
    ``mesh.num_faces``.
    """
    labels = np.asarray(face_labels, dtype=bool).reshape(-1)
    if len(labels) != mesh.num_faces:
        raise ValueError(f"need {mesh.num_faces} labels, got {len(labels)}")
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {mesh.num_vertices}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {mesh.num_faces}",
        "property list uchar int vertex_indices",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    for v in mesh.vertices:
        lines.append(f"{v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    for f, lab in zip(mesh.faces, labels):
        r, g, b = LABEL_COLORS[bool(lab)]
        lines.append(f"3 {f[0]} {f[1]} {f[2]} {r} {g} {b}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_ply(path) -> tuple[TriMesh, np.ndarray]:
    """Read back a PLY written by :func:`save_colored_ply`.

    Returns (mesh, face_labels). Only the ASCII layout this package emits
    is supported.
    """
    with open(path, "r") as fh:
        tokens = fh.read().split("\n")
    try:
        end = tokens.index("end_header")
    except ValueError:
        raise MeshFormatError("PLY missing end_header", 0) from None
    nv = nf = None
    for line in tokens[:end]:
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            nv = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            nf = int(parts[2])
    if nv is None or nf is None:
        raise MeshFormatError("PLY missing vertex/face element counts", 0)
    body = tokens[end + 1 :]
    verts = np.array([[float(x) for x in body[i].split()] for i in range(nv)])
    faces = np.zeros((nf, 3), dtype=np.int64)
    labels = np.zeros(nf, dtype=bool)
    for i in range(nf):
        parts = body[nv + i].split()
        if parts[0] != "3":
            raise MeshFormatError(f"face {i} is not a triangle", 0)
        faces[i] = [int(parts[1]), int(parts[2]), int(parts[3])]
        labels[i] = tuple(int(x) for x in parts[4:7]) == LABEL_COLORS[True]
    return TriMesh(verts, faces), labels
