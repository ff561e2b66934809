"""Parametric model of the flexible endoscope carrying the fiber.

The scope enters along a fixed approach axis (+z of the scene frame),
advances by an insertion depth, rolls about its shaft, and articulates
its distal section as a single constant-curvature arc in one plane. The
camera sits at the arc end looking along the local +z axis; the working
channel exits beside it, rigidly coupled, so the fiber's base frame is
the channel exit.

Articulation ranges, camera field of view, and the channel-to-camera
offset of a real clinical scope are instrument data we do not have;
the defaults below are plausible round numbers and every one of them is
configurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh
from .raycast import cast_cone
from .transforms import Pose, Twist, exp_twist
from .sheath import InvalidConfigError

__all__ = ["ScopeDesign", "ScopeConfig", "scope_frames", "camera_visible_faces"]

_ARC_SAMPLES = 8  # backbone poses along the articulated section


@dataclass(frozen=True)
class ScopeDesign:
    """Scope geometry and sensing parameters. Lengths mm, angles rad."""

    shaft_diameter: float = 5.0
    channel_offset: tuple[float, float] = (1.4, 0.0)  # channel axis in the tip cross-section
    bend_section_length: float = 30.0
    bend_range: tuple[float, float] = (-math.radians(130.0), math.radians(130.0))
    camera_fov: float = math.radians(45.0)  # cone half-angle
    camera_range: float = 60.0
    insertion_range: tuple[float, float] = (0.0, 12.0)

    def __post_init__(self):
        if self.shaft_diameter <= 0:
            raise ValueError("shaft_diameter must be positive")
        if self.bend_section_length <= 0:
            raise ValueError("bend_section_length must be positive")
        lo, hi = self.bend_range
        if not lo <= 0.0 <= hi:
            raise ValueError(f"bend_range must contain 0, got {self.bend_range}")
        if not 0.0 < self.camera_fov < math.pi / 2:
            raise ValueError(f"camera_fov must lie in (0, pi/2), got {self.camera_fov}")
        if self.camera_range <= 0:
            raise ValueError("camera_range must be positive")
        ilo, ihi = self.insertion_range
        if not ilo <= ihi:
            raise ValueError(f"empty insertion_range {self.insertion_range}")


@dataclass(frozen=True)
class ScopeConfig:
    """Scope state: insertion depth (mm), shaft roll (rad), tip
    articulation angle (rad, signed, single plane)."""

    insertion: float = 0.0
    roll: float = 0.0
    tip_bend: float = 0.0

    def __post_init__(self):
        vals = (self.insertion, self.roll, self.tip_bend)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidConfigError(f"non-finite scope configuration {vals}")


def validate_scope_config(design: ScopeDesign, config: ScopeConfig) -> None:
    lo, hi = design.bend_range
    if not lo <= config.tip_bend <= hi:
        raise InvalidConfigError(
            f"tip_bend={config.tip_bend:.6g} rad outside range [{lo:.6g}, {hi:.6g}]"
        )
    ilo, ihi = design.insertion_range
    if not ilo <= config.insertion <= ihi:
        raise InvalidConfigError(
            f"insertion={config.insertion:.6g} mm outside range [{ilo:.6g}, {ihi:.6g}] mm"
        )


def scope_frames(
    design: ScopeDesign, config: ScopeConfig
) -> tuple[Pose, Pose, list[Pose]]:
    """Channel-exit pose, camera pose, and scope backbone samples.

    The backbone runs from the entry plane to the camera: the straight
    inserted shaft, then _ARC_SAMPLES poses along the articulated arc.
    Camera and channel exit share one rigid tip; their relative offset
    never depends on the configuration.
    """
    validate_scope_config(design, config)
    entry = Pose.identity()
    bend_base = Pose.from_translation((0.0, 0.0, config.insertion)) @ Pose.from_rot_z(
        config.roll
    )
    kappa = config.tip_bend / design.bend_section_length
    arc = Twist(v=(0.0, 0.0, 1.0), w=(0.0, kappa, 0.0))
    backbone = [entry, bend_base]
    step = design.bend_section_length / _ARC_SAMPLES
    pose = bend_base
    arc_step = exp_twist(arc, step)
    for _ in range(_ARC_SAMPLES):
        pose = pose @ arc_step
        backbone.append(pose)
    camera = pose
    ox, oy = design.channel_offset
    channel_exit = camera @ Pose.from_translation((ox, oy, 0.0))
    return channel_exit, camera, backbone


def camera_visible_faces(
    camera: Pose,
    design: ScopeDesign,
    mesh: TriMesh,
    n_rays: int,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Sorted indices of faces the camera sees: struck first by at least
    one of n_rays cast uniformly over the field-of-view cone, within
    camera_range.

    With a generator carried across calls of increasing n_rays, the ray
    set only grows, so the visible set is monotone in n_rays.
    """
    if n_rays < 1:
        raise ValueError("need at least one camera ray")
    if rng is None:
        rng = np.random.default_rng(0)
    faces, _ = cast_cone(
        camera, mesh, n_rays, design.camera_fov, rng, max_range=design.camera_range
    )
    return faces
