"""Command-line interface.

Subcommands: fk, bend-curve, limits, workspace, fit, register, power,
gen-phantom. Angles cross this boundary in degrees; everything internal
is radians. Artifacts are written atomically (temp file + rename), so a
failing run never leaves a partial file. Exit codes: 0 success, 2
configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .calibration import (
    BendSample,
    bend_loss,
    fit_bend_line,
    power_budget,
    register_fiducials,
)
from .config import _SCHEMA, ConfigError, RunConfig, load_config
from .mesh import load_mesh, save_colored_ply, save_stl
from .phantom import generate_phantom
from .reachability import build_map, coverage_area
from .sheath import (
    FiberConfig,
    InvalidConfigError,
    bend_angle,
    forward_kinematics,
    max_bend_angle,
    max_tendon_displacement,
    min_bend_radius,
    neutral_plane,
    per_notch_closure,
)

__all__ = ["main"]


def _atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit_json(obj, path: str | None):
    text = _json_text(obj)
    sys.stdout.write(text)
    if path:
        _atomic_write_text(path, text)


def _parse_sets(pairs: list[str]) -> dict[str, object]:
    """--set key=value overrides, validated against the config schema."""
    out: dict[str, object] = {}
    for pair in pairs or []:
        key, sep, val = pair.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        out[key] = _SCHEMA[key][1](val.strip())
    return out


def _config_from(args, extra: dict[str, object] | None = None) -> RunConfig:
    overrides = _parse_sets(getattr(args, "set", None))
    overrides.update(extra or {})
    return load_config(getattr(args, "config", None), overrides)


def _add_config_args(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="FILE", help="key-value config file")
    p.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key (repeatable); same keys as the file",
    )


def _cmd_limits(args) -> int:
    cfg = _config_from(args)
    d = cfg.sheath
    _emit_json(
        {
            "phi_max_deg": math.degrees(max_bend_angle(d)),
            "min_bend_radius_mm": min_bend_radius(d),
            "neutral_plane_mm": neutral_plane(d),
            "per_notch_closure_mm": per_notch_closure(d),
            "max_tendon_mm": max_tendon_displacement(d),
        },
        args.json,
    )
    return 0


def _cmd_fk(args) -> int:
    cfg = _config_from(args)
    fiber = FiberConfig(dl=args.dl, z=args.z, theta=math.radians(args.theta_deg))
    tip, backbone = forward_kinematics(cfg.sheath, fiber)
    _emit_json(
        {
            "tip_position_mm": [round(v, 12) for v in tip.translation.tolist()],
            "tip_rotation": [[round(v, 12) for v in row] for row in tip.rotation.tolist()],
            "bend_angle_deg": math.degrees(bend_angle(cfg.sheath, args.dl)),
            "backbone_points": len(backbone),
        },
        args.json,
    )
    return 0


def _cmd_bend_curve(args) -> int:
    cfg = _config_from(args)
    d = cfg.sheath
    dl = np.linspace(0.0, max_tendon_displacement(d), args.points)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["dl_mm", "phi_model_deg"])
    for value in dl:
        writer.writerow([f"{value:.9g}", f"{math.degrees(bend_angle(d, float(value))):.9g}"])
    _atomic_write_text(args.csv, buf.getvalue())
    print(f"wrote {args.csv} ({args.points} rows)")
    if args.png:
        from .report import render_bend_curve

        render_bend_curve(d, args.png, points=args.points)
        print(f"wrote {args.png}")
    return 0


def _cmd_workspace(args) -> int:
    extra: dict[str, object] = {}
    if args.n is not None:
        extra["sampling.n"] = args.n
    if args.seed is not None:
        extra["sampling.seed"] = args.seed
    if args.rays is not None:
        extra["beam.rays_per_config"] = args.rays
    if args.camera_rays is not None:
        extra["sampling.camera_rays"] = args.camera_rays
    if args.mode is not None:
        extra["sampling.mode"] = args.mode
    if args.visibility is not None:
        extra["sampling.visibility"] = args.visibility
    if args.clearance is not None:
        extra["sampling.clearance"] = args.clearance
    cfg = _config_from(args, extra)
    mesh = load_mesh(args.mesh)
    rmap = build_map(
        mesh,
        cfg.sheath,
        cfg.scope,
        cfg.n,
        cfg.beam,
        cfg.seed,
        mode=cfg.mode,
        threads=args.threads,
        clearance=cfg.clearance,
        camera_rays=cfg.camera_rays,
        visibility=cfg.visibility,
    )
    prefix = args.out_prefix
    summary = {
        "mesh": os.path.basename(args.mesh),
        "mesh_faces": mesh.num_faces,
        "mesh_area_cm2": round(mesh.total_area / 100.0, 9),
        "mode": rmap.mode,
        "visibility": cfg.visibility,
        "seed": rmap.seed,
        "configs_requested": cfg.n,
        "configs_evaluated": rmap.configs_evaluated,
        "sampling_shortfall": rmap.shortfall,
        "rays_per_config": cfg.beam.rays_per_config,
        "camera_rays": cfg.camera_rays,
        "beam_divergence_deg": round(math.degrees(cfg.beam.divergence), 9),
        "faces_laser_hit": int(np.count_nonzero(rmap.laser_hits)),
        "faces_camera_seen": int(np.count_nonzero(rmap.camera_seen)),
        "faces_jointly_reachable": int(np.count_nonzero(rmap.jointly_reachable)),
        "coverage_cm2": round(coverage_area(rmap), 9),
    }
    _emit_json(summary, f"{prefix}.json")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["face", "area_mm2", "laser_hits", "camera_seen", "jointly_reachable"])
    for i in range(mesh.num_faces):
        writer.writerow(
            [
                i,
                f"{mesh.face_areas[i]:.9g}",
                int(rmap.laser_hits[i]),
                int(rmap.camera_seen[i]),
                int(rmap.jointly_reachable[i]),
            ]
        )
    _atomic_write_text(f"{prefix}.csv", buf.getvalue())
    save_colored_ply(mesh, rmap.jointly_reachable, f"{prefix}.ply")
    if args.png:
        from .report import render_workspace

        render_workspace(rmap, f"{prefix}.png")
    return 0


def _read_point_csv(path: str, columns: int) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.reader(fh):
            if not record or not record[0].strip():
                continue
            try:
                rows.append([float(x) for x in record[:columns]])
            except ValueError:
                if rows:
                    raise ConfigError(f"{path}: non-numeric row {record!r}")
                continue  # header line
    if not rows:
        raise ConfigError(f"{path}: no numeric rows")
    return np.array(rows)


def _cmd_fit(args) -> int:
    data = _read_point_csv(args.input, 2)
    samples = [BendSample(dl=row[0], phi=math.radians(row[1])) for row in data]
    slope, intercept, r2 = fit_bend_line(samples)
    _emit_json(
        {
            "n_samples": len(samples),
            "slope_rad_per_mm": slope,
            "slope_deg_per_mm": math.degrees(slope),
            "intercept_rad": intercept,
            "intercept_deg": math.degrees(intercept),
            "r_squared": r2,
        },
        args.json,
    )
    if args.png:
        from .report import render_fit

        render_fit(data[:, 0], np.radians(data[:, 1]), slope, intercept, args.png)
    return 0


def _cmd_register(args) -> int:
    src = _read_point_csv(args.src, 3)
    dst = _read_point_csv(args.dst, 3)
    try:
        result = register_fiducials(src, dst)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit_json(
        {
            "rotation": result.rotation.tolist(),
            "translation_mm": result.translation.tolist(),
            "rms_error_mm": result.rms_error,
        },
        args.json,
    )
    return 0


def _cmd_power(args) -> int:
    radius = math.inf if args.bend_radius_mm is None else args.bend_radius_mm
    try:
        delivered = power_budget(args.input_w, radius)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit_json(
        {
            "input_w": args.input_w,
            "bend_radius_mm": None if math.isinf(radius) else radius,
            "bend_loss_fraction": bend_loss(radius),
            "delivered_w": delivered,
        },
        args.json,
    )
    return 0


def _cmd_gen_phantom(args) -> int:
    mesh = generate_phantom()
    save_stl(mesh, args.out, binary=not args.ascii)
    print(f"wrote {args.out}: {mesh.num_faces} faces, {mesh.total_area / 100.0:.2f} cm2")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steerfiber",
        description="Steerable laser fiber kinematics and reachable-workspace analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("limits", help="design limits: max bend angle, min bend radius")
    _add_config_args(p)
    p.add_argument("--json", metavar="FILE", help="also write the JSON report here")
    p.set_defaults(func=_cmd_limits)

    p = sub.add_parser("fk", help="tip pose for one fiber configuration")
    _add_config_args(p)
    p.add_argument("--dl", type=float, default=0.0, help="tendon displacement (mm)")
    p.add_argument("--z", type=float, default=0.0, help="axial translation (mm)")
    p.add_argument("--theta-deg", type=float, default=0.0, help="axial rotation (deg)")
    p.add_argument("--json", metavar="FILE", help="also write the JSON report here")
    p.set_defaults(func=_cmd_fk)

    p = sub.add_parser("bend-curve", help="tendon-to-angle curve as CSV (and PNG)")
    _add_config_args(p)
    p.add_argument("--points", type=int, default=200, help="number of curve samples")
    p.add_argument("--csv", default="bend_curve.csv", metavar="FILE", help="output CSV path")
    p.add_argument("--png", metavar="FILE", help="also render the curve to this PNG")
    p.set_defaults(func=_cmd_bend_curve)

    p = sub.add_parser("workspace", help="sample configurations and map coverage")
    _add_config_args(p)
    p.add_argument("--mesh", required=True, metavar="STL", help="anatomy mesh (mm)")
    p.add_argument("--n", type=int, help="configurations to sample (count)")
    p.add_argument("--seed", type=int, help="random seed (integer)")
    p.add_argument("--rays", type=int, help="laser rays per configuration (count)")
    p.add_argument("--camera-rays", type=int, help="camera rays per configuration (count)")
    p.add_argument(
        "--mode", choices=["steerable", "straight"], help="tendon free or locked to zero"
    )
    p.add_argument(
        "--visibility",
        choices=["joint", "pooled"],
        help="camera gate per configuration (joint) or across all (pooled)",
    )
    p.add_argument("--clearance", type=float, help="extra collision margin (mm)")
    p.add_argument(
        "--threads", type=int, default=1, help="worker processes (does not affect results)"
    )
    p.add_argument(
        "--out-prefix",
        default="workspace",
        metavar="PREFIX",
        help="artifact prefix: writes PREFIX.json, PREFIX.csv, PREFIX.ply",
    )
    p.add_argument("--png", action="store_true", help="also render PREFIX.png")
    p.set_defaults(func=_cmd_workspace)

    p = sub.add_parser("fit", help="linear fit of measured (dl, angle) samples")
    p.add_argument("--input", required=True, metavar="CSV", help="rows of dl_mm,phi_deg")
    p.add_argument("--json", metavar="FILE", help="also write the JSON report here")
    p.add_argument("--png", metavar="FILE", help="also render samples + fit to this PNG")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("register", help="rigid registration of fiducial points")
    p.add_argument("--src", required=True, metavar="CSV", help="source points, rows of x,y,z (mm)")
    p.add_argument("--dst", required=True, metavar="CSV", help="destination points, same order (mm)")
    p.add_argument("--json", metavar="FILE", help="also write the JSON report here")
    p.set_defaults(func=_cmd_register)

    p = sub.add_parser("power", help="delivered laser power after coupling and bend loss")
    p.add_argument("--input-w", type=float, required=True, help="source power (W)")
    p.add_argument(
        "--bend-radius-mm",
        type=float,
        default=None,
        help="sustained bend radius (mm); omit for a straight fiber",
    )
    p.add_argument("--json", metavar="FILE", help="also write the JSON report here")
    p.set_defaults(func=_cmd_power)

    p = sub.add_parser("gen-phantom", help="write the bundled synthetic larynx phantom")
    p.add_argument("--out", default="phantom.stl", metavar="STL", help="output mesh path")
    p.add_argument("--ascii", action="store_true", help="write ASCII STL instead of binary")
    p.set_defaults(func=_cmd_gen_phantom)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
