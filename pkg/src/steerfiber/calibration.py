"""Calibration procedures: tendon-to-angle linear fit, rigid fiducial
registration, and the delivered laser power budget."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BendSample",
    "RegistrationResult",
    "fit_bend_line",
    "register_fiducials",
    "power_budget",
    "COUPLING_EFFICIENCY",
    "BEND_LOSS_AT_MIN_RADIUS",
    "FIBER_MIN_RADIUS_MM",
]

COUPLING_EFFICIENCY = 0.545  # fraction of source power coupled into the fiber
BEND_LOSS_AT_MIN_RADIUS = 0.045  # fractional loss at the 6 mm rated bend
FIBER_MIN_RADIUS_MM = 6.0
# Decay constant of the bend-loss tail (1/mm). Only the 6 mm endpoint and
# the straight-fiber limit are measured; between them the loss is taken to
# fall off log-linearly with radius, an engineering approximation.
BEND_LOSS_DECAY_PER_MM = 0.25

_COLLINEAR_RTOL = 1e-9


@dataclass(frozen=True)
class BendSample:
    """One calibration observation: tendon pull (mm), bend angle (rad)."""

    dl: float
    phi: float

    def __post_init__(self):
        if self.dl < 0 or not math.isfinite(self.dl) or not math.isfinite(self.phi):
            raise ValueError(f"bad bend sample dl={self.dl}, phi={self.phi}")


def fit_bend_line(samples: list[BendSample]) -> tuple[float, float, float]:
    """Ordinary least squares phi = slope*dl + intercept.

    Returns (slope rad/mm, intercept rad, r_squared). The intercept
    captures any resting pre-curvature. Requires two distinct dl values.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    dl = np.array([s.dl for s in samples])
    phi = np.array([s.phi for s in samples])
    if np.ptp(dl) == 0.0:
        raise ValueError("all samples share one tendon displacement; fit is rank-deficient")
    slope, intercept = np.polyfit(dl, phi, 1)
    resid = phi - (slope * dl + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((phi - phi.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


@dataclass(frozen=True)
class RegistrationResult:
    rotation: np.ndarray  # 3x3, det +1
    translation: np.ndarray  # mm
    rms_error: float  # mm

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation


def register_fiducials(src: np.ndarray, dst: np.ndarray) -> RegistrationResult:
    """Least-squares rigid transform mapping src points onto dst.

    Covariance/SVD solution with a reflection guard; correspondences are
    positional (row i of src matches row i of dst). Raises on fewer than
    three points or on (near-)collinear input, where the rotation about
    the common axis is unobservable.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError(f"point sets must share shape (n, 3), got {src.shape} and {dst.shape}")
    if len(src) < 3:
        raise ValueError("need at least three correspondences")
    if not (np.isfinite(src).all() and np.isfinite(dst).all()):
        raise ValueError("points must be finite")
    cs = src.mean(axis=0)
    cd = dst.mean(axis=0)
    for pts, cen, name in ((src, cs, "source"), (dst, cd, "destination")):
        sv = np.linalg.svd(pts - cen, compute_uv=False)
        if sv[1] <= _COLLINEAR_RTOL * sv[0]:
            raise ValueError(f"{name} points are collinear; registration is degenerate")
    h = (src - cs).T @ (dst - cd)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    trans = cd - rot @ cs
    resid = src @ rot.T + trans - dst
    rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return RegistrationResult(rotation=rot, translation=trans, rms_error=rms)


def bend_loss(bend_radius: float) -> float:
    """Fractional optical power loss at a sustained bend radius (mm).

    Anchored at the fiber's rated minimum (4.5% at 6 mm) and zero for a
    straight fiber, decaying exponentially in between.
    """
    if bend_radius < FIBER_MIN_RADIUS_MM:
        raise ValueError(
            f"bend radius {bend_radius} mm below the fiber rating "
            f"({FIBER_MIN_RADIUS_MM} mm)"
        )
    if math.isinf(bend_radius):
        return 0.0
    return BEND_LOSS_AT_MIN_RADIUS * math.exp(
        -(bend_radius - FIBER_MIN_RADIUS_MM) * BEND_LOSS_DECAY_PER_MM
    )


def power_budget(input_w: float, bend_radius: float) -> float:
    """Laser power delivered at the fiber tip (W) from a source power,
    after coupling loss and bend loss at the given radius (mm, inf for
    a straight fiber)."""
    if input_w < 0:
        raise ValueError("input power must be nonnegative")
    return input_w * COUPLING_EFFICIENCY * (1.0 - bend_loss(bend_radius))
