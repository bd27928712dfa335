"""Figure rendering from trajectory logs.

Four figure kinds: position/attitude time series with dashed reference
overlays, thrust profile, 3D trajectory with obstacle cylinders and
mode-colored path segments, and a two-log ablation comparison.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.lines import Line2D

from .logdata import (
    ScenarioData,
    TrajectoryData,
    reference_trajectory,
    segment_by_mode,
)

MODE_COLORS = {
    "O-Ground": "tab:green",
    "N-Ground": "tab:orange",
    "Flight": "tab:blue",
}

POSITION_LABELS = ["x [m]", "y [m]", "z [m]"]
ATTITUDE_LABELS = ["yaw [rad]", "pitch [rad]", "roll [rad]"]


def _pad_limits(ax, data, axis_name):
    lo, hi = float(np.min(data)), float(np.max(data))
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    getattr(ax, f"set_{axis_name}lim")(lo, hi)


def render_timeseries(traj: TrajectoryData, scenario: ScenarioData, out_path: str) -> None:
    """Position and attitude versus time, actual solid, reference dashed."""
    ref_pos, _ = reference_trajectory(scenario, traj.t)
    fig, axes = plt.subplots(2, 1, figsize=(8, 7), sharex=True)

    for i in range(3):
        axes[0].plot(traj.t, traj.position[:, i], label=POSITION_LABELS[i])
    axes[0].set_prop_cycle(None)
    for i in range(3):
        axes[0].plot(traj.t, ref_pos[:, i], linestyle="--", alpha=0.7)
    axes[0].set_ylabel("position [m]")
    axes[0].legend(loc="upper left", fontsize=8)
    axes[0].grid(alpha=0.3)

    for i in range(3):
        axes[1].plot(traj.t, traj.attitude[:, i], label=ATTITUDE_LABELS[i])
    axes[1].set_prop_cycle(None)
    for i in range(3):
        axes[1].plot(traj.t, traj.attitude_ref[:, i], linestyle="--", alpha=0.7)
    axes[1].set_ylabel("attitude [rad]")
    axes[1].set_xlabel("time [s]")
    axes[1].legend(loc="upper left", fontsize=8)
    axes[1].grid(alpha=0.3)

    if len(traj) == 1:
        _pad_limits(axes[1], traj.t, "x")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_thrust(traj: TrajectoryData, out_path: str) -> None:
    """Total thrust versus time, collision steps marked."""
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.plot(traj.t, traj.thrust, color="tab:red", linewidth=1.0)
    if traj.collision.any():
        ax.scatter(
            traj.t[traj.collision],
            traj.thrust[traj.collision],
            s=12,
            color="black",
            marker="x",
            label="collision step",
        )
        ax.legend(fontsize=8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("thrust [N]")
    ax.grid(alpha=0.3)
    if len(traj) == 1:
        _pad_limits(ax, traj.t, "x")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _draw_cylinder(ax, point, axis, radius, span=1.2, color="gray", alpha=0.35):
    axis = axis / np.linalg.norm(axis)
    # orthonormal frame around the axis
    seed = np.array([1.0, 0.0, 0.0])
    if abs(axis @ seed) > 0.9:
        seed = np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, seed)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    angles = np.linspace(0.0, 2 * np.pi, 24)
    lengths = np.linspace(-span, span, 8)
    ang, lng = np.meshgrid(angles, lengths)
    pts = (
        point[None, None, :]
        + lng[..., None] * axis[None, None, :]
        + radius * np.cos(ang)[..., None] * u[None, None, :]
        + radius * np.sin(ang)[..., None] * v[None, None, :]
    )
    ax.plot_surface(pts[..., 0], pts[..., 1], pts[..., 2], color=color, alpha=alpha, linewidth=0)


def _plot_mode_colored_path(ax, traj: TrajectoryData):
    segments = segment_by_mode(traj.modes)
    for start, stop, mode in segments:
        # include the first point of the next segment so the path is
        # visually continuous across the mode change
        stop_inclusive = min(stop + 1, len(traj))
        seg = traj.position[start:stop_inclusive]
        ax.plot(
            seg[:, 0], seg[:, 1], seg[:, 2],
            color=MODE_COLORS.get(mode, "black"), linewidth=1.8,
        )
    return segments


def render_trajectory3d(traj: TrajectoryData, scenario: ScenarioData, out_path: str) -> None:
    """3D path colored by contact mode, with inflated obstacle cylinders."""
    fig = plt.figure(figsize=(9, 6))
    ax = fig.add_subplot(projection="3d")
    for obs in scenario.obstacles:
        _draw_cylinder(ax, obs["point"], obs["axis"], obs["radius"] + scenario.inflation)
        _draw_cylinder(ax, obs["point"], obs["axis"], obs["radius"], color="dimgray", alpha=0.8)
    _plot_mode_colored_path(ax, traj)
    ax.scatter(*scenario.start, color="black", marker="o", s=30)
    ax.scatter(*scenario.goal, color="red", marker="*", s=80)
    handles = [Line2D([0], [0], color=c, lw=2, label=m) for m, c in MODE_COLORS.items()]
    ax.legend(handles=handles, fontsize=8)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    ax.set_zlim(bottom=0.0)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_ablation(
    traj_with: TrajectoryData,
    traj_without: TrajectoryData,
    scenario: ScenarioData,
    out_path: str,
) -> None:
    """Side and top views of two runs, auxiliary prior on versus off."""
    fig, axes = plt.subplots(2, 1, figsize=(9, 7))
    labels = ("with auxiliary prior", "without auxiliary prior")
    colors = ("tab:blue", "tab:red")

    for ax_idx, (horiz, vert, hlab, vlab) in enumerate(
        ((0, 2, "x [m]", "z [m]"), (0, 1, "x [m]", "y [m]"))
    ):
        ax = axes[ax_idx]
        for traj, label, color in zip((traj_with, traj_without), labels, colors):
            ax.plot(traj.position[:, horiz], traj.position[:, vert], color=color, label=label)
            hit = traj.collision
            if hit.any():
                ax.scatter(
                    traj.position[hit, horiz], traj.position[hit, vert],
                    s=14, marker="x", color=color,
                )
        for obs in scenario.obstacles:
            point, axis = obs["point"], obs["axis"]
            r = obs["radius"] + scenario.inflation
            if abs(axis[horiz]) < 0.9 and abs(axis[vert]) < 0.9:
                circle = plt.Circle((point[horiz], point[vert]), r, color="gray", alpha=0.4)
                ax.add_patch(circle)
            else:
                # axis lies in the view plane: draw the slab between the
                # two extreme lines
                ax.axvspan(point[horiz] - r, point[horiz] + r, color="gray", alpha=0.15)
        ax.scatter(scenario.goal[horiz], scenario.goal[vert], color="red", marker="*", s=80)
        ax.set_xlabel(hlab)
        ax.set_ylabel(vlab)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    axes[0].set_ylim(bottom=-0.02)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
