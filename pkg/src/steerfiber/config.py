"""Run configuration: a flat key-value text format with dotted sections.

Example file::

    # prototype sheath, default scope
    sheath.h = 0.19
    sheath.n = 10
    scope.camera_fov_deg = 45
    sampling.n = 2000
    sampling.seed = 7

Lines are ``key = value`` with ``#`` comments. Angles are written in
degrees (keys carry a ``_deg`` suffix) and converted to radians here;
everything internal is radians and mm. Unknown keys are rejected, not
ignored, so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .endoscope import ScopeDesign
from .reachability import DEFAULT_CAMERA_RAYS, BeamSpec
from .sheath import SheathDesign, prototype_design

__all__ = ["ConfigError", "RunConfig", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Bad configuration input; the message names the offending key."""


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _parse_deg(text: str) -> float:
    return math.radians(_parse_float(text))


def _parse_choice(*choices: str):
    def parse(text: str) -> str:
        if text not in choices:
            raise ConfigError(f"expected one of {choices}, got {text!r}")
        return text

    return parse


# key -> (field path, parser); field paths are (section, attribute)
_SCHEMA = {
    "sheath.h": (("sheath", "h"), _parse_float),
    "sheath.w": (("sheath", "w"), _parse_float),
    "sheath.u": (("sheath", "u"), _parse_float),
    "sheath.n": (("sheath", "n"), _parse_int),
    "sheath.r_i": (("sheath", "r_i"), _parse_float),
    "sheath.r_o": (("sheath", "r_o"), _parse_float),
    "sheath.distal_offset": (("sheath", "distal_offset"), _parse_float),
    "sheath.precurve_deg": (("sheath", "precurve"), _parse_deg),
    "sheath.z_travel": (("sheath", "z_travel"), _parse_float),
    "scope.shaft_diameter": (("scope", "shaft_diameter"), _parse_float),
    "scope.channel_offset_x": (("scope", "_channel_x"), _parse_float),
    "scope.channel_offset_y": (("scope", "_channel_y"), _parse_float),
    "scope.bend_section_length": (("scope", "bend_section_length"), _parse_float),
    "scope.bend_min_deg": (("scope", "_bend_min"), _parse_deg),
    "scope.bend_max_deg": (("scope", "_bend_max"), _parse_deg),
    "scope.camera_fov_deg": (("scope", "camera_fov"), _parse_deg),
    "scope.camera_range": (("scope", "camera_range"), _parse_float),
    "scope.insertion_min": (("scope", "_insertion_min"), _parse_float),
    "scope.insertion_max": (("scope", "_insertion_max"), _parse_float),
    "beam.divergence_deg": (("beam", "divergence"), _parse_deg),
    "beam.rays_per_config": (("beam", "rays_per_config"), _parse_int),
    "beam.max_range": (("beam", "max_range"), _parse_float),
    "sampling.n": (("sampling", "n"), _parse_int),
    "sampling.seed": (("sampling", "seed"), _parse_int),
    "sampling.clearance": (("sampling", "clearance"), _parse_float),
    "sampling.camera_rays": (("sampling", "camera_rays"), _parse_int),
    "sampling.mode": (("sampling", "mode"), _parse_choice("steerable", "straight")),
    "sampling.visibility": (("sampling", "visibility"), _parse_choice("joint", "pooled")),
}


@dataclass
class RunConfig:
    """Fully resolved run parameters."""

    sheath: SheathDesign = field(default_factory=prototype_design)
    scope: ScopeDesign = field(default_factory=ScopeDesign)
    beam: BeamSpec = field(default_factory=BeamSpec)
    n: int = 10_000
    seed: int = 0
    clearance: float = 0.0
    camera_rays: int = DEFAULT_CAMERA_RAYS
    mode: str = "steerable"
    visibility: str = "joint"


def parse_config_text(text: str, source: str = "<config>") -> dict[str, object]:
    """Parse the key-value format into {dotted key: typed value}."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _SCHEMA[key][1](val)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: key {key!r}: {exc}") from None
    return values


def load_config(
    path: str | None = None, overrides: dict[str, object] | None = None
) -> RunConfig:
    """Build a RunConfig from an optional file plus override values.

    Overrides use the same dotted keys, already typed (angles in rad).
    File values lose to overrides; both lose fail-closed validation in
    the underlying dataclasses.
    """
    values: dict[str, object] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values.update(parse_config_text(text, source=path))
    for key, val in (overrides or {}).items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown override key {key!r}")
        values[key] = val

    sections: dict[str, dict[str, object]] = {"sheath": {}, "scope": {}, "beam": {}, "sampling": {}}
    for key, val in values.items():
        (section, attr), _ = _SCHEMA[key]
        sections[section][attr] = val

    sheath_kw = sections["sheath"]
    scope_kw = sections["scope"]
    # paired fields arrive as halves; fill the other half from defaults
    defaults = ScopeDesign()
    if "_channel_x" in scope_kw or "_channel_y" in scope_kw:
        scope_kw["channel_offset"] = (
            scope_kw.pop("_channel_x", defaults.channel_offset[0]),
            scope_kw.pop("_channel_y", defaults.channel_offset[1]),
        )
    if "_bend_min" in scope_kw or "_bend_max" in scope_kw:
        scope_kw["bend_range"] = (
            scope_kw.pop("_bend_min", defaults.bend_range[0]),
            scope_kw.pop("_bend_max", defaults.bend_range[1]),
        )
    if "_insertion_min" in scope_kw or "_insertion_max" in scope_kw:
        scope_kw["insertion_range"] = (
            scope_kw.pop("_insertion_min", defaults.insertion_range[0]),
            scope_kw.pop("_insertion_max", defaults.insertion_range[1]),
        )
    sampling = sections["sampling"]
    try:
        cfg = RunConfig(
            sheath=prototype_design(**sheath_kw),
            scope=ScopeDesign(**scope_kw),
            beam=BeamSpec(**sections["beam"]),
            **{k: v for k, v in sampling.items()},
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.n < 0 or cfg.camera_rays < 1 or cfg.clearance < 0:
        raise ConfigError("sampling.n must be >= 0, camera_rays >= 1, clearance >= 0")
    return cfg
