"""Scenario description: cylindrical obstacles with inflated collision
checking and a trapezoidal straight-line reference trajectory.

Obstacles are infinite cylinders given by an axis point, a unit axis
direction and a radius. Collision is checked against the vehicle's center
of gravity with the cylinder radius inflated by half the body diagonal
sqrt(d^2 + l^2) / 2, so the check is conservative for any attitude.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PhysicalParams

AXIS_UNIT_TOL = 1e-9


@dataclass
class CylinderObstacle:
    """Infinite cylinder: a point on the axis, a unit axis direction, radius."""

    point: np.ndarray
    axis: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        self.point = np.asarray(self.point, dtype=float).reshape(3)
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(self.axis) - 1.0) > AXIS_UNIT_TOL:
            raise ValueError("obstacle axis must be a unit vector")
        if self.radius <= 0.0:
            raise ValueError("obstacle radius must be positive")


@dataclass
class Scenario:
    """Immutable run scenario: obstacles, start/goal, inflation offset and
    the (slope, cruise speed) of the trapezoidal reference profile."""

    obstacles: list[CylinderObstacle]
    xi_0: np.ndarray
    xi_g: np.ndarray
    inflation: float
    profile: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self) -> None:
        self.xi_0 = np.asarray(self.xi_0, dtype=float).reshape(3)
        self.xi_g = np.asarray(self.xi_g, dtype=float).reshape(3)
        if self.inflation < 0.0:
            raise ValueError("inflation must be nonnegative")
        slope, cruise = self.profile
        if slope <= 0.0 or cruise <= 0.0:
            raise ValueError("profile slope and cruise speed must be positive")


@dataclass
class ReferencePoint:
    """Reference position and velocity at one instant."""

    xi_d: np.ndarray
    xi_dot_d: np.ndarray


def inflation_radius(params: PhysicalParams) -> float:
    """Collision offset: half the wheel-diameter/axle-length diagonal."""
    return float(np.hypot(params.d, params.l) / 2.0)


def obstacle_distances(points: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Distance from each query point to each obstacle axis.

    points: (..., 3). Returns (..., n_obstacles).
    """
    points = np.asarray(points, dtype=float)
    if not scenario.obstacles:
        return np.full(points.shape[:-1] + (0,), np.inf)
    out = np.empty(points.shape[:-1] + (len(scenario.obstacles),))
    for i, obs in enumerate(scenario.obstacles):
        rel = points - obs.point
        along = rel @ obs.axis
        perp = rel - along[..., None] * obs.axis
        out[..., i] = np.sqrt(np.einsum("...i,...i->...", perp, perp))
    return out


def collision_mask(points: np.ndarray, scenario: Scenario, margin: float = 0.0) -> np.ndarray:
    """Boolean collision flags for a batch of positions (inclusive boundary).

    A positive margin widens every inflated obstacle; planners use it to
    keep clearance beyond the bare collision condition.
    """
    if not scenario.obstacles:
        points = np.asarray(points, dtype=float)
        return np.zeros(points.shape[:-1], dtype=bool)
    dists = obstacle_distances(points, scenario)
    limits = np.array([obs.radius + scenario.inflation + margin for obs in scenario.obstacles])
    return np.any(dists <= limits, axis=-1)


def collision_indicator(xi: np.ndarray, scenario: Scenario) -> int:
    """1 if the position lies within any inflated obstacle, else 0.

    A point exactly on the inflated boundary counts as a collision.
    """
    return int(collision_mask(np.asarray(xi, dtype=float).reshape(3), scenario))


def _profile_durations(length: float, slope: float, cruise: float) -> tuple[float, float, float]:
    """(ramp time, cruise time, peak speed) of the speed profile for a path
    of the given length; short paths degenerate to a triangular profile."""
    ramp_dist = cruise * cruise / (2.0 * slope)
    if length >= 2.0 * ramp_dist:
        t_ramp = cruise / slope
        t_cruise = (length - 2.0 * ramp_dist) / cruise
        return t_ramp, t_cruise, cruise
    peak = np.sqrt(slope * length)
    return peak / slope, 0.0, peak


def reference_duration(scenario: Scenario) -> float:
    """Total time for the reference to travel from start to goal."""
    length = float(np.linalg.norm(scenario.xi_g - scenario.xi_0))
    slope, cruise = scenario.profile
    if length == 0.0:
        return 0.0
    t_ramp, t_cruise, _ = _profile_durations(length, slope, cruise)
    return 2.0 * t_ramp + t_cruise


def reference_at(t: float, scenario: Scenario) -> ReferencePoint:
    """Reference position/velocity at time t >= 0 along the straight
    start-to-goal segment under the trapezoidal speed profile. Past the
    end of the profile the reference parks at the goal with zero velocity."""
    if t < 0.0:
        raise ValueError("reference time must be nonnegative")
    offset = scenario.xi_g - scenario.xi_0
    length = float(np.linalg.norm(offset))
    if length == 0.0:
        return ReferencePoint(scenario.xi_g.copy(), np.zeros(3))
    direction = offset / length
    slope, cruise = scenario.profile
    t_ramp, t_cruise, peak = _profile_durations(length, slope, cruise)
    t_total = 2.0 * t_ramp + t_cruise

    if t >= t_total:
        return ReferencePoint(scenario.xi_g.copy(), np.zeros(3))
    if t < t_ramp:
        speed = slope * t
        dist = 0.5 * slope * t * t
    elif t < t_ramp + t_cruise:
        speed = peak
        dist = 0.5 * slope * t_ramp * t_ramp + peak * (t - t_ramp)
    else:
        t_down = t - t_ramp - t_cruise
        speed = peak - slope * t_down
        dist = (
            0.5 * slope * t_ramp * t_ramp
            + peak * t_cruise
            + peak * t_down
            - 0.5 * slope * t_down * t_down
        )
    return ReferencePoint(scenario.xi_0 + dist * direction, speed * direction)


def default_scenario(params: PhysicalParams) -> Scenario:
    """Three-cylinder obstacle course: two upright posts on the ground and
    an elevated crossbar that can only be cleared by flying."""
    obstacles = [
        CylinderObstacle(point=np.array([2.0, 0.0, 0.14]), axis=np.array([0.0, 1.0, 0.0]), radius=0.05),
        CylinderObstacle(point=np.array([0.6, 0.15, 0.0]), axis=np.array([0.0, 0.0, 1.0]), radius=0.05),
        CylinderObstacle(point=np.array([1.6, 0.05, 0.0]), axis=np.array([0.0, 0.0, 1.0]), radius=0.05),
    ]
    return Scenario(
        obstacles=obstacles,
        xi_0=np.zeros(3),
        xi_g=np.array([3.0, 0.5, 0.0]),
        inflation=inflation_radius(params),
        profile=(0.5, 0.5),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "start": scenario.xi_0.tolist(),
        "goal": scenario.xi_g.tolist(),
        "obstacles": [
            {"point": o.point.tolist(), "axis": o.axis.tolist(), "radius": o.radius}
            for o in scenario.obstacles
        ],
        "profile": {"slope": scenario.profile[0], "cruise_speed": scenario.profile[1]},
    }


def scenario_from_dict(data: dict, inflation: float) -> Scenario:
    """Build a Scenario from its JSON document form. Units: m, s, rad.

    The inflation offset is not part of the document; it derives from the
    vehicle geometry and is supplied by the caller.
    """
    obstacles = [
        CylinderObstacle(
            point=np.asarray(o["point"], dtype=float),
            axis=np.asarray(o["axis"], dtype=float),
            radius=float(o["radius"]),
        )
        for o in data.get("obstacles", [])
    ]
    profile = data.get("profile", {})
    return Scenario(
        obstacles=obstacles,
        xi_0=np.asarray(data["start"], dtype=float),
        xi_g=np.asarray(data["goal"], dtype=float),
        inflation=inflation,
        profile=(float(profile.get("slope", 0.5)), float(profile.get("cruise_speed", 0.5))),
    )


def load_scenario(path: str, inflation: float) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh), inflation)
