"""steerfiber: kinematics and workspace analysis for a tendon-driven
notched sheath steering a laser fiber through an endoscope channel."""

__version__ = "0.1.0"

from .calibration import (
    BendSample,
    RegistrationResult,
    bend_loss,
    fit_bend_line,
    power_budget,
    register_fiducials,
)
from .config import ConfigError, RunConfig, load_config, parse_config_text
from .collision import FaceGrid, collision_free, segment_triangle_distance
from .endoscope import ScopeConfig, ScopeDesign, camera_visible_faces, scope_frames
from .mesh import MeshFormatError, TriMesh, load_mesh, save_colored_ply, save_stl
from .phantom import PHANTOM_DEFAULTS, generate_phantom
from .raycast import Hit, Ray, first_hit, first_hits, intersect, sample_cone_directions
from .reachability import (
    BeamSpec,
    ReachabilityMap,
    SceneConfig,
    build_map,
    cast_laser_cone,
    coverage_area,
    sample_configs,
)
from .sheath import (
    ArcParams,
    ClosureError,
    FiberConfig,
    InvalidConfigError,
    SheathDesign,
    bend_angle,
    effective_bend_radius,
    forward_kinematics,
    max_bend_angle,
    max_tendon_displacement,
    min_bend_radius,
    neutral_plane,
    notch_arc,
    per_notch_closure,
    prototype_design,
    tendon_for_angle,
)
from .transforms import Pose, Twist, exp_twist

__all__ = [
    "__version__",
    "Pose",
    "Twist",
    "exp_twist",
    "TriMesh",
    "MeshFormatError",
    "load_mesh",
    "save_stl",
    "save_colored_ply",
    "Ray",
    "Hit",
    "intersect",
    "first_hit",
    "first_hits",
    "sample_cone_directions",
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
    "ScopeDesign",
    "ScopeConfig",
    "scope_frames",
    "camera_visible_faces",
    "FaceGrid",
    "collision_free",
    "segment_triangle_distance",
    "BeamSpec",
    "SceneConfig",
    "ReachabilityMap",
    "sample_configs",
    "ConfigError",
    "RunConfig",
    "load_config",
    "parse_config_text",
    "cast_laser_cone",
    "build_map",
    "coverage_area",
    "BendSample",
    "RegistrationResult",
    "fit_bend_line",
    "bend_loss",
    "register_fiducials",
    "power_budget",
    "generate_phantom",
    "PHANTOM_DEFAULTS",
]
