"""Figure rendering for CLI reports.

matplotlib is imported inside each function so that subcommands which
never plot (limits, fk, power) do not pay its import cost. Figures are
written atomically: rendered to a temporary file, then renamed over the
target.
"""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from .reachability import ReachabilityMap
from .sheath import SheathDesign, bend_angle, max_tendon_displacement

__all__ = ["render_bend_curve", "render_fit", "render_workspace"]


def _atomic_savefig(fig, path: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=130, format="png")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_bend_curve(design: SheathDesign, path: str, points: int = 200):
    """Model bend angle vs total tendon displacement, with the closure
    limit marked."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    dl_max = max_tendon_displacement(design)
    dl = np.linspace(0.0, dl_max, points)
    phi = np.degrees([bend_angle(design, d) for d in dl])
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(dl, phi, lw=1.6)
    ax.axvline(dl_max, color="0.5", ls="--", lw=0.9)
    ax.annotate(f"closure {dl_max:.3f} mm", (dl_max, phi[0]), rotation=90,
                xytext=(-10, 8), textcoords="offset points", fontsize=8, color="0.35")
    ax.set_xlabel("tendon displacement (mm)")
    ax.set_ylabel("bend angle (deg)")
    ax.set_title("tendon-to-angle model")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _atomic_savefig(fig, path)
    plt.close(fig)


def render_fit(dl: np.ndarray, phi: np.ndarray, slope: float, intercept: float, path: str):
    """Calibration samples with the fitted line (angles in rad in, plotted
    in degrees)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(dl, np.degrees(phi), "o", ms=4, alpha=0.8, label="samples")
    xs = np.linspace(float(np.min(dl)), float(np.max(dl)), 50)
    ax.plot(xs, np.degrees(slope * xs + intercept), "-", lw=1.4,
            label=f"fit: {math.degrees(slope):.2f} deg/mm")
    ax.set_xlabel("tendon displacement (mm)")
    ax.set_ylabel("bend angle (deg)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _atomic_savefig(fig, path)
    plt.close(fig)


def render_workspace(rmap: ReachabilityMap, path: str):
    """Two projections of face centroids classified as jointly reachable,
    laser-only, or untouched."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cen = rmap.mesh.face_centroids
    joint = rmap.jointly_reachable
    laser_only = (rmap.laser_hits > 0) & ~joint
    rest = ~joint & ~laser_only
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.5), sharey=True)
    for ax, (i, name) in zip(axes, ((0, "x"), (1, "y"))):
        ax.scatter(cen[rest, i], cen[rest, 2], s=2, c="0.82", label="untouched")
        ax.scatter(cen[laser_only, i], cen[laser_only, 2], s=2, c="#e8a33d",
                   label="laser only")
        ax.scatter(cen[joint, i], cen[joint, 2], s=2, c="#2aa84a",
                   label="laser + camera")
        ax.set_xlabel(f"{name} (mm)")
        ax.set_aspect("equal")
        ax.invert_yaxis()
    axes[0].set_ylabel("z (mm)")
    axes[1].legend(fontsize=8, markerscale=3, loc="lower right")
    fig.suptitle(
        f"{rmap.mode} mode: {rmap.coverage_cm2:.2f} cm2 over "
        f"{rmap.configs_evaluated} configurations"
    )
    fig.tight_layout()
    _atomic_savefig(fig, path)
    plt.close(fig)
