"""Auxiliary position controller and cascaded attitude-tracking torque law.

The auxiliary controller is a gravity-compensating PD law that converts a
position/velocity tracking error into a (thrust, reference attitude)
command. The planner rolls it out over its horizon to seed a slice of the
sample distribution, which is what lets the optimizer discover the sharp
thrust increase needed to switch from driving to flying.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    PhysicalParams,
    SingularAttitudeError,
    coriolis_matrix,
    euler_rate_matrix,
    psi_matrix,
)


@dataclass
class AuxGains:
    """Proportional/derivative gains of the auxiliary position law."""

    k_xi: np.ndarray = field(default_factory=lambda: np.eye(3))
    k_xi_dot: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self) -> None:
        self.k_xi = np.asarray(self.k_xi, dtype=float).reshape(3, 3)
        self.k_xi_dot = np.asarray(self.k_xi_dot, dtype=float).reshape(3, 3)


@dataclass
class AttitudeGains:
    """Proportional/derivative gains of the attitude torque law."""

    k_eta: np.ndarray = field(default_factory=lambda: np.diag([20.0, 20.0, 20.0]))
    k_eta_dot: np.ndarray = field(default_factory=lambda: np.diag([10.0, 10.0, 10.0]))

    def __post_init__(self) -> None:
        self.k_eta = np.asarray(self.k_eta, dtype=float).reshape(3, 3)
        self.k_eta_dot = np.asarray(self.k_eta_dot, dtype=float).reshape(3, 3)


# Minimum allowed vertical specific force, as a fraction of gravity. Keeps
# the commanded thrust direction well-defined when the PD law asks for a
# steep dive.
MIN_VERTICAL_ACCEL_FRACTION = 0.1


def auxiliary_input(
    xi: np.ndarray,
    xi_dot: np.ndarray,
    xi_d: np.ndarray,
    xi_dot_d: np.ndarray,
    gains: AuxGains,
    params: PhysicalParams,
) -> np.ndarray:
    """Gravity-compensating PD command [f, psi_d, theta_d, phi_d].

    mu = -K_xi (xi - xi_d) - K_xi_dot (xi_dot - xi_dot_d) is the desired
    acceleration; thrust magnitude and tilt angles realize mu + g e_z.
    The fourth slot is always 0; the caller applies the mode projection.
    """
    mu = -gains.k_xi @ (np.asarray(xi, dtype=float) - xi_d) - gains.k_xi_dot @ (
        np.asarray(xi_dot, dtype=float) - xi_dot_d
    )
    mu_x, mu_y, mu_z = mu
    vertical = mu_z + params.g
    floor = MIN_VERTICAL_ACCEL_FRACTION * params.g
    if vertical <= floor:
        vertical = floor
    norm = np.sqrt(mu_x * mu_x + mu_y * mu_y + vertical * vertical)
    return np.array(
        [
            params.m * norm,
            np.arcsin(-mu_y / norm),
            np.arctan2(mu_x, vertical),
            0.0,
        ]
    )


def attitude_torque(
    eta: np.ndarray,
    eta_dot: np.ndarray,
    eta_d: np.ndarray,
    eta_dot_d: np.ndarray,
    gains: AttitudeGains,
    params: PhysicalParams,
) -> np.ndarray:
    """PD torque driving the attitude toward eta_d:
    tau = J Psi (-K_eta e - K_eta_dot e_dot) + Phi C eta_dot."""
    eta = np.asarray(eta, dtype=float).reshape(3)
    eta_dot = np.asarray(eta_dot, dtype=float).reshape(3)
    e = eta - np.asarray(eta_d, dtype=float).reshape(3)
    e_dot = eta_dot - np.asarray(eta_dot_d, dtype=float).reshape(3)
    psi_m = psi_matrix(eta)
    phi_m = euler_rate_matrix(eta)  # Psi^-1
    c_mat = coriolis_matrix(eta, eta_dot, params)
    return params.j_matrix @ psi_m @ (-gains.k_eta @ e - gains.k_eta_dot @ e_dot) + phi_m @ (
        c_mat @ eta_dot
    )


__all__ = [
    "AuxGains",
    "AttitudeGains",
    "auxiliary_input",
    "attitude_torque",
    "SingularAttitudeError",
]
