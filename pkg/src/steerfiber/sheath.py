"""Constant-curvature kinematics of a tendon-driven notched sheath.

A superelastic tube carries n rectangular asymmetric notches of height h
cut to chordal depth w (past the axis, so the neutral plane lies in the
uncut wall), separated by uncut spacers of length u. Pulling the tendon
by dl closes the notches and bends the tube in one plane. Each notch is
modeled as a circular arc whose curvature and arc length follow from the
neutral-plane offset ybar of the uncut cross-section.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .transforms import Pose, Twist, exp_twist

__all__ = [
    "SheathDesign",
    "FiberConfig",
    "ArcParams",
    "InvalidConfigError",
    "ClosureError",
    "prototype_design",
    "neutral_plane",
    "notch_arc",
    "forward_kinematics",
    "max_bend_angle",
    "min_bend_radius",
    "effective_bend_radius",
    "per_notch_closure",
    "max_tendon_displacement",
    "tendon_for_angle",
    "bend_angle",
]

FIBER_MIN_RADIUS_MM = 6.0  # rated minimum bend radius of the laser fiber
_ARC_INTERIOR_SAMPLES = 4  # backbone poses inside each notch arc


class InvalidConfigError(ValueError):
    """A configuration violates a design bound; message names the bound."""


class ClosureError(InvalidConfigError):
    """Tendon displacement beyond notch closure."""


def _segment_area_centroid(r: float, d: float) -> tuple[float, float]:
    """Area and centroid distance of the circular segment cut off by a
    chord at distance d from the center of a disc of radius r.

    Returns (0, 0) when the chord clears the disc (d >= r).
    """
    if d >= r:
        return 0.0, 0.0
    half = math.sqrt(r * r - d * d)
    area = r * r * math.acos(d / r) - d * half
    centroid = (2.0 / 3.0) * (r * r - d * d) ** 1.5 / area
    return area, centroid


@dataclass(frozen=True)
class SheathDesign:
    """Geometry of the notched sheath. Lengths in mm, angles in rad.

    h may be zero, which degenerates to a rigid (non-bending) sheath;
    this keeps limiting-case queries (zero max angle, unbounded bend
    radius) expressible.
    """

    h: float  # notch height
    w: float  # notch cut depth, measured from the outer surface
    u: float  # uncut spacing between notches
    n: int  # notch count
    r_i: float  # tube inner radius
    r_o: float  # tube outer radius
    distal_offset: float = 1.0  # end cap + fiber protrusion past the last notch
    precurve: float = 0.0  # resting bend at zero tendon tension
    z_travel: float = 17.0  # axial translation range of the actuation unit

    def __post_init__(self):
        if not (0 < self.r_i < self.r_o):
            raise ValueError(f"need 0 < r_i < r_o, got r_i={self.r_i}, r_o={self.r_o}")
        if self.h < 0:
            raise ValueError(f"notch height must be nonnegative, got h={self.h}")
        if self.u <= 0:
            raise ValueError(f"notch spacing must be positive, got u={self.u}")
        if not (self.r_o < self.w < 2.0 * self.r_o):
            raise ValueError(
                f"cut depth must satisfy r_o < w < 2*r_o (asymmetric notch past "
                f"the axis), got w={self.w} with r_o={self.r_o}"
            )
        if self.n < 1:
            raise ValueError(f"need at least one notch, got n={self.n}")
        if self.distal_offset < 0 or self.z_travel < 0:
            raise ValueError("distal_offset and z_travel must be nonnegative")
        ybar = self.ybar  # force the derived-quantity check
        if not (0.0 < ybar < self.r_o):
            raise ValueError(f"derived neutral plane ybar={ybar} outside (0, r_o)")

    @cached_property
    def ybar(self) -> float:
        """Neutral bending plane offset from the tube axis (mm)."""
        d = self.w - self.r_o  # chord distance from the axis, uncut side
        area_o, cen_o = _segment_area_centroid(self.r_o, d)
        area_i, cen_i = _segment_area_centroid(self.r_i, d)
        if area_o - area_i <= 0.0:
            raise ValueError("cut depth leaves no uncut material")
        return (cen_o * area_o - cen_i * area_i) / (area_o - area_i)


def prototype_design(**overrides) -> SheathDesign:
    """The fabricated prototype geometry: ten 0.19 mm notches cut 0.94 mm
    deep into a 0.90/1.10 mm tube on a 1.31 mm pitch."""
    params = dict(h=0.19, w=0.94, u=1.31, n=10, r_i=0.45, r_o=0.55)
    params.update(overrides)
    return SheathDesign(**params)


@dataclass(frozen=True)
class FiberConfig:
    """Actuation state: tendon pull dl (mm), axial translation z (mm),
    axial rotation theta (rad, reported mod 2pi)."""

    dl: float = 0.0
    z: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        vals = (self.dl, self.z, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidConfigError(f"non-finite configuration {vals}")

    @property
    def theta_wrapped(self) -> float:
        return self.theta % (2.0 * math.pi)


@dataclass(frozen=True)
class ArcParams:
    """One notch deformed into a circular arc: curvature kappa (1/mm)
    and arc length s (mm)."""

    kappa: float
    s: float

    @property
    def angle(self) -> float:
        """Bend angle swept by the arc (rad)."""
        return self.kappa * self.s


def neutral_plane(design: SheathDesign) -> float:
    """Distance from the tube axis to the centroid of the uncut
    cross-section (mm): the fiber of the wall that neither stretches nor
    compresses when the notch closes."""
    return design.ybar


def per_notch_closure(design: SheathDesign) -> float:
    """Tendon displacement at which one notch's faces touch (mm)."""
    return design.h * (design.r_i + design.ybar) / (design.r_o + design.ybar)


def max_tendon_displacement(design: SheathDesign) -> float:
    """Total tendon displacement at full closure of all notches (mm)."""
    return design.n * per_notch_closure(design)


def notch_arc(dl_per_notch: float, design: SheathDesign, clamp: bool = False) -> ArcParams:
    """Arc parameters of a single notch under a per-notch tendon pull.

    The uncut wall bends about the neutral plane: the tendon shortens the
    cut side by dl while the neutral fiber keeps its length, giving

        kappa = dl / (h*(r_i + ybar) - dl*ybar),   s = h / (1 + ybar*kappa).

    Displacements beyond closure raise ClosureError, or clamp to closure
    with a warning when ``clamp`` is set.
    """
    if dl_per_notch < 0:
        raise InvalidConfigError(f"tendon displacement must be nonnegative, got {dl_per_notch}")
    limit = per_notch_closure(design)
    if dl_per_notch > limit * (1.0 + 1e-12):
        if not clamp:
            raise ClosureError(
                f"per-notch displacement {dl_per_notch:.6g} mm exceeds closure "
                f"{limit:.6g} mm"
            )
        warnings.warn(
            f"clamping per-notch displacement {dl_per_notch:.6g} mm to closure "
            f"{limit:.6g} mm",
            stacklevel=2,
        )
        dl_per_notch = limit
    dl_per_notch = min(dl_per_notch, limit)
    if dl_per_notch == 0.0 or design.h == 0.0:
        return ArcParams(kappa=0.0, s=design.h)
    denom = design.h * (design.r_i + design.ybar) - dl_per_notch * design.ybar
    kappa = dl_per_notch / denom
    s = design.h / (1.0 + design.ybar * kappa)
    return ArcParams(kappa=kappa, s=s)


def max_bend_angle(design: SheathDesign) -> float:
    """Total bend angle at full closure (rad): n*h/(r_o + ybar)."""
    return design.n * design.h / (design.r_o + design.ybar)


def bend_angle(design: SheathDesign, dl_total: float) -> float:
    """Total bend angle (rad) for a total tendon displacement, including
    any precurve. Evaluated through the per-notch arc model."""
    arc = notch_arc(dl_total / design.n, design)
    return design.n * (arc.angle + design.precurve / design.n)


def tendon_for_angle(design: SheathDesign, phi: float) -> float:
    """Total tendon displacement producing a commanded bend angle (rad).

    Exact inverse of the arc model: dl_total = phi*(r_i + ybar). The
    angle is the tendon-induced bend; precurve adds on top of it.
    """
    if not 0.0 <= phi <= max_bend_angle(design) * (1.0 + 1e-12):
        raise InvalidConfigError(
            f"angle {phi:.6g} rad outside [0, {max_bend_angle(design):.6g}]"
        )
    return phi * (design.r_i + design.ybar)


def _curving_span(design: SheathDesign, dl_total: float) -> float:
    """Backbone length between the first and last notch (mm): n arcs and
    the n-1 spacers separating them."""
    arc = notch_arc(dl_total / design.n, design)
    return design.n * arc.s + (design.n - 1) * design.u


def effective_bend_radius(design: SheathDesign, dl_total: float) -> float:
    """Center-line bend radius of the curving span (mm): its backbone
    length over the total bend angle. Unbounded (inf) when straight.

    This is the radius the fiber inside the sheath is subjected to, the
    quantity limited by the fiber's 6 mm rating; spacers between notches
    relax it well above the much tighter per-notch arc radius.
    """
    phi = bend_angle(design, dl_total)
    if phi <= 0.0:
        return math.inf
    return _curving_span(design, dl_total) / phi


def min_bend_radius(design: SheathDesign) -> float:
    """Center-line bend radius at full closure (mm), the tightest the
    design can impose; inf for a design that cannot bend."""
    if design.h == 0.0 and design.precurve == 0.0:
        return math.inf
    return effective_bend_radius(design, max_tendon_displacement(design))


def validate_config(design: SheathDesign, config: FiberConfig) -> None:
    """Raise InvalidConfigError naming the violated bound, if any."""
    dl_max = max_tendon_displacement(design)
    if not 0.0 <= config.dl <= dl_max * (1.0 + 1e-12):
        raise ClosureError(
            f"dl={config.dl:.6g} mm outside tendon range [0, {dl_max:.6g}] mm"
        )
    if not 0.0 <= config.z <= design.z_travel * (1.0 + 1e-12):
        raise InvalidConfigError(
            f"z={config.z:.6g} mm outside travel range [0, {design.z_travel:.6g}] mm"
        )


def forward_kinematics(
    design: SheathDesign, config: FiberConfig
) -> tuple[Pose, list[Pose]]:
    """Pose of the sheath tip and backbone samples, in the base frame.

    The base motion is the axial translation z along and rotation theta
    about the base z-axis; the tendon displacement splits uniformly
    across the n notches, each deforming into a circular arc (plus a
    fixed precurve/n offset), separated by straight spacers; a straight
    distal offset models the end cap and fiber protrusion.

    The backbone list holds a pose at the base, at every arc/spacer
    boundary, and at 4 interior points of each arc, ordered base to tip.
    """
    validate_config(design, config)
    arc = notch_arc(config.dl / design.n, design)
    notch_angle = arc.angle + design.precurve / design.n
    kappa_eff = notch_angle / arc.s if arc.s > 0 else 0.0
    arc_twist = Twist(v=(0.0, 0.0, 1.0), w=(0.0, kappa_eff, 0.0))
    straight = Twist(v=(0.0, 0.0, 1.0), w=(0.0, 0.0, 0.0))

    pose = Pose.from_translation((0.0, 0.0, config.z)) @ Pose.from_rot_z(config.theta)
    backbone = [pose]
    step = arc.s / (_ARC_INTERIOR_SAMPLES + 1)
    arc_step = exp_twist(arc_twist, step) if arc.s > 0 else None
    spacer = exp_twist(straight, design.u)
    for _ in range(design.n):
        if arc_step is not None:
            for _ in range(_ARC_INTERIOR_SAMPLES + 1):
                pose = pose @ arc_step
                backbone.append(pose)
        pose = pose @ spacer
        backbone.append(pose)
    if design.distal_offset > 0:
        pose = pose @ exp_twist(straight, design.distal_offset)
        backbone.append(pose)
    return pose, backbone


def backbone_points(backbone: list[Pose]) -> np.ndarray:
    """Positions of a backbone polyline as an (m, 3) array."""
    return np.array([p.translation for p in backbone])
