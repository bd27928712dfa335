"""Parsing of trajectory CSV logs and scenario JSON documents.

This package talks to the simulator only through its file formats: the
documented trajectory.csv column set and the scenario JSON schema
{start, goal, obstacles: [{point, axis, radius}], profile: {slope,
cruise_speed}}. Nothing here imports simulator code.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

REQUIRED_COLUMNS = [
    "t",
    "xi_x", "xi_y", "xi_z",
    "psi", "theta", "phi",
    "xi_dot_x", "xi_dot_y", "xi_dot_z",
    "psi_dot", "theta_dot", "phi_dot",
    "mode",
    "f", "psi_d", "theta_d", "phi_d",
    "tau_x", "tau_y", "tau_z",
    "collision",
    "min_cost", "ess",
]

# default collision offset: half body diagonal of the stock vehicle
# (wheel diameter 0.28 m, axle length 0.35 m)
DEFAULT_INFLATION = float(np.hypot(0.28, 0.35) / 2.0)


class LogFormatError(ValueError):
    """Trajectory log missing, empty, or with unexpected columns."""


@dataclass
class TrajectoryData:
    """Columns of one trajectory log, as arrays plus the mode strings."""

    t: np.ndarray
    position: np.ndarray      # (n, 3)
    attitude: np.ndarray      # (n, 3) yaw, pitch, roll
    velocity: np.ndarray      # (n, 3)
    attitude_ref: np.ndarray  # (n, 3) commanded yaw, pitch, roll
    thrust: np.ndarray
    modes: list[str]
    collision: np.ndarray     # bool

    def __len__(self) -> int:
        return len(self.t)


def load_trajectory(path: str) -> TrajectoryData:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise LogFormatError(f"log {path} is missing columns: {', '.join(missing)}")
            rows = list(reader)
    except OSError as err:
        raise LogFormatError(f"cannot read log: {err}") from err
    if not rows:
        raise LogFormatError(f"log {path} contains no data rows")

    def col(name):
        return np.array([float(r[name]) for r in rows])

    return TrajectoryData(
        t=col("t"),
        position=np.column_stack([col("xi_x"), col("xi_y"), col("xi_z")]),
        attitude=np.column_stack([col("psi"), col("theta"), col("phi")]),
        velocity=np.column_stack([col("xi_dot_x"), col("xi_dot_y"), col("xi_dot_z")]),
        attitude_ref=np.column_stack([col("psi_d"), col("theta_d"), col("phi_d")]),
        thrust=col("f"),
        modes=[r["mode"] for r in rows],
        collision=np.array([r["collision"] == "1" for r in rows]),
    )


@dataclass
class ScenarioData:
    start: np.ndarray
    goal: np.ndarray
    obstacles: list[dict]
    slope: float = 0.5
    cruise_speed: float = 0.5
    inflation: float = DEFAULT_INFLATION


def load_scenario(path: str, inflation: float | None = None) -> ScenarioData:
    with open(path) as fh:
        doc = json.load(fh)
    profile = doc.get("profile", {})
    return ScenarioData(
        start=np.asarray(doc["start"], dtype=float),
        goal=np.asarray(doc["goal"], dtype=float),
        obstacles=[
            {
                "point": np.asarray(o["point"], dtype=float),
                "axis": np.asarray(o["axis"], dtype=float),
                "radius": float(o["radius"]),
            }
            for o in doc.get("obstacles", [])
        ],
        slope=float(profile.get("slope", 0.5)),
        cruise_speed=float(profile.get("cruise_speed", 0.5)),
        inflation=DEFAULT_INFLATION if inflation is None else float(inflation),
    )


def reference_trajectory(scenario: ScenarioData, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Straight-line trapezoidal reference positions/velocities at the
    given times, recomputed from the scenario profile."""
    offset = scenario.goal - scenario.start
    length = float(np.linalg.norm(offset))
    times = np.asarray(times, dtype=float)
    if length == 0.0:
        return np.tile(scenario.goal, (len(times), 1)), np.zeros((len(times), 3))
    direction = offset / length
    a, v = scenario.slope, scenario.cruise_speed
    ramp_dist = v * v / (2.0 * a)
    if length >= 2.0 * ramp_dist:
        t_ramp, peak = v / a, v
        t_cruise = (length - 2.0 * ramp_dist) / v
    else:
        peak = np.sqrt(a * length)
        t_ramp, t_cruise = peak / a, 0.0
    t_total = 2.0 * t_ramp + t_cruise

    dist = np.empty_like(times)
    speed = np.empty_like(times)
    for i, t in enumerate(times):
        if t >= t_total:
            dist[i], speed[i] = length, 0.0
        elif t < t_ramp:
            dist[i], speed[i] = 0.5 * a * t * t, a * t
        elif t < t_ramp + t_cruise:
            dist[i] = 0.5 * a * t_ramp**2 + peak * (t - t_ramp)
            speed[i] = peak
        else:
            td = t - t_ramp - t_cruise
            dist[i] = 0.5 * a * t_ramp**2 + peak * t_cruise + peak * td - 0.5 * a * td * td
            speed[i] = peak - a * td
    return scenario.start + dist[:, None] * direction, speed[:, None] * direction


def segment_by_mode(modes: list[str]) -> list[tuple[int, int, str]]:
    """Contiguous runs of equal mode as (start, stop_exclusive, mode).

    Figure code colors each segment separately, so segment boundaries are
    exactly the mode-change rows of the log.
    """
    if not modes:
        return []
    segments = []
    start = 0
    for i in range(1, len(modes)):
        if modes[i] != modes[i - 1]:
            segments.append((start, i, modes[start]))
            start = i
    segments.append((start, len(modes), modes[start]))
    return segments
