"""Rigid-body transforms: twists, the se(3) exponential map, and poses.

Units are millimeters for translations and radians for rotations
throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Twist", "Pose", "exp_twist"]


def _skew(w: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


@dataclass(frozen=True)
class Twist:
    """Body-frame twist: translational rate ``v`` and rotational rate ``w``.

    ``v`` is in mm per unit arc, ``w`` in rad per unit arc. Both are
    stored as read-only float64 arrays of shape (3,).
    """

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        for name in ("v", "w"):
            arr = np.array(getattr(self, name), dtype=float).reshape(3)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"twist {name} must be finite, got {arr}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class Pose:
    """Rigid transform: ``rotation`` (3x3, det +1) and ``translation`` (mm).

    Composition is ``a @ b`` (apply ``b`` first, then ``a``); points are
    mapped with :meth:`apply`.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_rot_z(cls, angle: float) -> "Pose":
        c, s = np.cos(angle), np.sin(angle)
        return cls(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]), np.zeros(3))

    @classmethod
    def from_translation(cls, t) -> "Pose":
        return cls(np.eye(3), np.asarray(t, dtype=float))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map one point (3,) or a stack of points (N, 3)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    @property
    def z_axis(self) -> np.ndarray:
        return self.rotation[:, 2]


def exp_twist(xi: Twist, length: float) -> Pose:
    """Exponential of the twist ``xi`` scaled by ``length``.

    Closed-form Rodrigues construction: pure translation when ``w = 0``,
    general screw motion otherwise. Small rotation angles are handled by
    series expansion so the result stays orthonormal to machine precision.
    """
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    wl = xi.w * length
    vl = xi.v * length
    theta = float(np.linalg.norm(wl))
    k = _skew(wl)
    k2 = k @ k
    if theta < 1e-6:
        # Taylor coefficients of sin(t)/t, (1-cos t)/t^2, (t-sin t)/t^3
        t2 = theta * theta
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
        c = 1.0 / 6.0 - t2 / 120.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / (theta * theta)
        c = (theta - np.sin(theta)) / (theta * theta * theta)
    rot = np.eye(3) + a * k + b * k2
    vmat = np.eye(3) + b * k + c * k2
    return Pose(rot, vmat @ vl)
