"""Reachable-workspace mapping for the scope + steerable fiber system.

The pipeline samples collision-free joint configurations with an RRT,
casts a diverging laser cone from the fiber tip at each one, gates the
struck faces by what the scope camera sees in that same configuration,
and accumulates the result into per-face counts and flags over an
anatomy mesh.

Evaluation is deterministic for a given seed regardless of worker
count: every configuration gets its own spawned random stream, and the
partial results merge by commutative operations only (saturating |= on
flags, += on counts).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .collision import FaceGrid, collision_free
from .endoscope import ScopeConfig, ScopeDesign, camera_visible_faces, scope_frames
from .mesh import TriMesh
from .raycast import cast_cone
from .sheath import (
    FiberConfig,
    SheathDesign,
    backbone_points,
    forward_kinematics,
    max_tendon_displacement,
)
from .transforms import Pose

__all__ = [
    "BeamSpec",
    "SceneConfig",
    "ReachabilityMap",
    "sample_configs",
    "cast_laser_cone",
    "build_map",
    "coverage_area",
]

RRT_STEP_FRACTION = 0.1  # step size as a fraction of the normalized DoF box
RRT_BUDGET_FACTOR = 50  # max extension attempts per requested node
DEFAULT_CAMERA_RAYS = 300  # rays per configuration for the camera gate


@dataclass(frozen=True)
class BeamSpec:
    """Laser beam model: full divergence cone angle (rad), rays cast per
    configuration, and an optional range cutoff (mm)."""

    divergence: float = math.radians(40.0)
    rays_per_config: int = 1000
    max_range: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.divergence < math.pi:
            raise ValueError(f"divergence must lie in (0, pi), got {self.divergence}")
        if self.rays_per_config < 1:
            raise ValueError("rays_per_config must be at least 1")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")


@dataclass(frozen=True)
class SceneConfig:
    """One joint state of the system."""

    scope: ScopeConfig
    fiber: FiberConfig


@dataclass
class ReachabilityMap:
    """Accumulated result over a mesh.

    laser_hits counts laser-ray first hits per face; camera_seen flags
    faces any camera gate saw; jointly_reachable flags faces that were
    laser-struck and camera-visible in the same configuration (or, in
    pooled mode, in any pair of configurations).
    """

    mesh: TriMesh
    laser_hits: np.ndarray
    camera_seen: np.ndarray
    jointly_reachable: np.ndarray
    configs_evaluated: int
    seed: int
    mode: str
    shortfall: bool = False

    @property
    def coverage_cm2(self) -> float:
        return coverage_area(self)


def coverage_area(rmap: ReachabilityMap) -> float:
    """Total area of jointly reachable faces, in cm^2."""
    return float(rmap.mesh.face_areas[rmap.jointly_reachable].sum()) / 100.0


def _dof_bounds(sheath: SheathDesign, scope: ScopeDesign, mode: str) -> np.ndarray:
    """(6, 2) bounds for (insertion, roll, tip_bend, dl, z, theta).

    Straight mode collapses the tendon dimension to zero; nearest-node
    distances use these ranges as normalizing weights (1/width each).
    """
    if mode not in ("steerable", "straight"):
        raise ValueError(f"unknown mode {mode!r}")
    dl_max = max_tendon_displacement(sheath) if mode == "steerable" else 0.0
    return np.array(
        [
            list(scope.insertion_range),
            [-math.pi, math.pi],
            list(scope.bend_range),
            [0.0, dl_max],
            [0.0, sheath.z_travel],
            [-math.pi, math.pi],
        ]
    )


def _to_scene(vec: np.ndarray) -> SceneConfig:
    return SceneConfig(
        scope=ScopeConfig(insertion=vec[0], roll=vec[1], tip_bend=vec[2]),
        fiber=FiberConfig(dl=vec[3], z=vec[4], theta=vec[5]),
    )


def _world_backbones(
    sheath: SheathDesign, scope: ScopeDesign, config: SceneConfig
) -> tuple[list[tuple[np.ndarray, float]], Pose, Pose]:
    """Collision chains in the scene frame, plus fiber tip and camera poses.

    The fiber chain starts at the channel exit so the straight protruding
    run between the scope tip and the fiber's first notch is covered too.
    """
    channel_exit, camera, scope_bb = scope_frames(scope, config.scope)
    fiber_tip, fiber_bb = forward_kinematics(sheath, config.fiber)
    fiber_pts = backbone_points(fiber_bb) @ channel_exit.rotation.T + channel_exit.translation
    fiber_pts = np.vstack([channel_exit.translation[None, :], fiber_pts])
    chains = [
        (backbone_points(scope_bb), scope.shaft_diameter / 2.0),
        (fiber_pts, sheath.r_o),
    ]
    return chains, channel_exit @ fiber_tip, camera


def sample_configs(
    mesh: TriMesh,
    sheath: SheathDesign,
    scope: ScopeDesign,
    n: int,
    seed: int,
    mode: str = "steerable",
    clearance: float = 0.0,
    budget_factor: int = RRT_BUDGET_FACTOR,
    grid: FaceGrid | None = None,
) -> list[SceneConfig]:
    """Grow an RRT over the 6-DoF joint space and return its nodes.

    Coordinates are normalized to the unit box by the DoF ranges. Each
    iteration draws a uniform target, finds the nearest existing node,
    steps a fixed 0.1 fraction toward the target, and keeps the new node
    iff both device backbones clear the mesh. The tree is rooted at the
    home configuration (minimum insertion, everything else zero/slack).

    Deterministic for a given seed, and a longer run's node list starts
    with a shorter run's. Returns fewer than n nodes (with a warning)
    if budget_factor*n attempts cannot place them, or an empty list if
    the home configuration itself collides.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    bounds = _dof_bounds(sheath, scope, mode)
    lo, hi = bounds[:, 0], bounds[:, 1]
    width = hi - lo
    free_dims = width > 0
    if grid is None and mesh.num_faces > 0:
        grid = FaceGrid(mesh)

    def is_free(unit_vec: np.ndarray) -> bool:
        cfg = _to_scene(lo + unit_vec * width)
        chains, _, _ = _world_backbones(sheath, scope, cfg)
        return collision_free(chains, mesh, clearance=clearance, grid=grid)

    # home: minimum insertion, all other DoFs at their neutral zero
    home_vals = np.array([lo[0], 0.0, 0.0, 0.0, 0.0, 0.0])
    home = np.zeros(6)
    home[free_dims] = (home_vals[free_dims] - lo[free_dims]) / width[free_dims]
    if not is_free(home):
        warnings.warn("home configuration collides with the mesh; no samples", stacklevel=2)
        return []
    nodes = np.empty((n, 6))
    nodes[0] = home
    count = 1
    rng = np.random.default_rng(seed)
    attempts = 0
    budget = budget_factor * n
    while count < n and attempts < budget:
        attempts += 1
        target = rng.random(6)
        target[~free_dims] = 0.0
        diffs = nodes[:count] - target
        nearest = nodes[int(np.argmin(np.einsum("ij,ij->i", diffs, diffs)))]
        step = target - nearest
        dist = float(np.linalg.norm(step))
        if dist > RRT_STEP_FRACTION:
            step *= RRT_STEP_FRACTION / dist
        candidate = np.clip(nearest + step, 0.0, 1.0)
        if is_free(candidate):
            nodes[count] = candidate
            count += 1
    if count < n:
        warnings.warn(
            f"RRT placed {count} of {n} nodes within {budget} attempts", stacklevel=2
        )
    return [_to_scene(lo + nodes[i] * width) for i in range(count)]


def cast_laser_cone(
    tip: Pose, beam: BeamSpec, mesh: TriMesh, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Cast the diverging beam from the fiber tip; returns (faces, counts)
    of first hits within range. Directions are uniform over the solid
    angle of the half-divergence cone about the tip axis."""
    return cast_cone(
        tip, mesh, beam.rays_per_config, beam.divergence / 2.0, rng, max_range=beam.max_range
    )


# worker state for process pools, set once per worker by the initializer
_EVAL_CTX: dict = {}


def _init_eval_worker(mesh, sheath, scope, beam, camera_rays):
    _EVAL_CTX["args"] = (mesh, sheath, scope, beam, camera_rays)


def _eval_batch_worker(payload):
    configs, seeds = payload
    return _evaluate_batch(*_EVAL_CTX["args"], configs, seeds)


def _evaluate_batch(
    mesh: TriMesh,
    sheath: SheathDesign,
    scope: ScopeDesign,
    beam: BeamSpec,
    camera_rays: int,
    configs: list[SceneConfig],
    seeds: list[np.random.SeedSequence],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Laser-hit counts, camera-seen mask, and joint mask for a batch."""
    laser = np.zeros(mesh.num_faces, dtype=np.int64)
    seen = np.zeros(mesh.num_faces, dtype=bool)
    joint = np.zeros(mesh.num_faces, dtype=bool)
    for cfg, child in zip(configs, seeds):
        laser_ss, cam_ss = child.spawn(2)
        _, tip, camera = _world_backbones(sheath, scope, cfg)
        faces, counts = cast_laser_cone(tip, beam, mesh, np.random.default_rng(laser_ss))
        if len(faces) == 0:
            continue
        laser[faces] += counts
        cam_faces = camera_visible_faces(
            camera, scope, mesh, camera_rays, rng=np.random.default_rng(cam_ss)
        )
        seen[cam_faces] = True
        both = np.intersect1d(faces, cam_faces, assume_unique=True)
        joint[both] = True
    return laser, seen, joint


def build_map(
    mesh: TriMesh,
    sheath: SheathDesign,
    scope: ScopeDesign,
    n: int,
    beam: BeamSpec,
    seed: int,
    mode: str = "steerable",
    threads: int = 1,
    clearance: float = 0.0,
    camera_rays: int = DEFAULT_CAMERA_RAYS,
    visibility: str = "joint",
    configs: list[SceneConfig] | None = None,
) -> ReachabilityMap:
    """Run the full pipeline and accumulate a ReachabilityMap.

    visibility="joint" requires laser hit and camera sight in the same
    configuration; "pooled" relaxes that to any configuration each.
    ``threads`` splits evaluation across processes without changing the
    result. Pass ``configs`` to reuse an already-sampled node list.
    """
    if visibility not in ("joint", "pooled"):
        raise ValueError(f"unknown visibility {visibility!r}")
    if n == 0 and configs is None:
        configs = []
    elif configs is None:
        configs = sample_configs(mesh, sheath, scope, n, seed, mode=mode, clearance=clearance)
    shortfall = len(configs) < n
    laser = np.zeros(mesh.num_faces, dtype=np.int64)
    seen = np.zeros(mesh.num_faces, dtype=bool)
    joint = np.zeros(mesh.num_faces, dtype=bool)
    if configs:
        seeds = np.random.SeedSequence(seed).spawn(len(configs))
        if threads <= 1:
            laser, seen, joint = _evaluate_batch(
                mesh, sheath, scope, beam, camera_rays, configs, seeds
            )
        else:
            nchunks = min(len(configs), threads * 4)
            payloads = [
                (configs[i::nchunks], seeds[i::nchunks]) for i in range(nchunks)
            ]
            with ProcessPoolExecutor(
                max_workers=threads,
                initializer=_init_eval_worker,
                initargs=(mesh, sheath, scope, beam, camera_rays),
            ) as pool:
                for part_laser, part_seen, part_joint in pool.map(
                    _eval_batch_worker, payloads
                ):
                    laser += part_laser
                    seen |= part_seen
                    joint |= part_joint
    if visibility == "pooled":
        joint = (laser > 0) & seen
    return ReachabilityMap(
        mesh=mesh,
        laser_hits=laser,
        camera_seen=seen,
        jointly_reachable=joint,
        configs_evaluated=len(configs),
        seed=seed,
        mode=mode,
        shortfall=shortfall,
    )
