"""Rigid-body model of a two-wheeled drone.

The vehicle is a quadrotor airframe with two passive coaxial side wheels.
It drives on the ground by tilting its thrust vector and flies like a
normal drone once airborne. This module provides:

* ZYX Euler-angle kinematics (rotation matrix, Euler-rate matrices) and
  the derived generalized inertia / Coriolis matrices,
* the altitude-dependent contact mode (on-ground / near-ground / flight)
  and the switch altitude below which a wheel can still touch down,
* constrained Euler-Lagrange dynamics with ground reaction, no-skid and
  no-roll Lagrange multipliers while driving,
* the impulsive velocity/attitude reset applied at ground contact.

Conventions: inertial frame with z up, ground plane at altitude 0 (wheel
contact height). Euler angles are ZYX ordered ``eta = (psi, theta, phi)``
(yaw, pitch, roll). Body velocity ``v = R^T xi_dot`` and body angular
velocity ``Omega = Psi(eta) eta_dot`` are derived, never stored.

All functions are pure; there is no shared mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

GROUND_EPS = 1e-6       # altitude at or below this counts as wheel contact [m]
COS_PITCH_MIN = 1e-6    # Euler-rate kinematics degenerate below this |cos(theta)|
LAMBDA3_DENOM_MIN = 1e-12

E_Z = np.array([0.0, 0.0, 1.0])

# Constraint projectors applied at the contact instant: T2 wipes the lateral
# (no-skid) body velocity, T3 wipes the roll channel. The restitution
# projector diag(1, 1, -e) depends on the material and is built on demand.
T2 = np.diag([1.0, 0.0, 1.0])
T3 = np.diag([1.0, 1.0, 0.0])


def t1_matrix(e: float) -> np.ndarray:
    """Vertical restitution projector diag(1, 1, -e)."""
    return np.diag([1.0, 1.0, -float(e)])


class SingularAttitudeError(ValueError):
    """Pitch too close to +-pi/2 for the Euler-rate kinematics."""


class Mode(Enum):
    """Altitude-dependent regime of the hybrid dynamics."""

    O_GROUND = "O-Ground"   # wheels on the ground, driving
    N_GROUND = "N-Ground"   # airborne but low enough that a wheel could touch
    FLIGHT = "Flight"       # clear of any possible wheel contact

    def __str__(self) -> str:
        return self.value


@dataclass
class State:
    """Full rigid-body state in the inertial frame.

    xi: position [m]; eta: ZYX Euler angles (psi, theta, phi) [rad];
    xi_dot: inertial velocity [m/s]; eta_dot: Euler-angle rates [rad/s].
    """

    xi: np.ndarray
    eta: np.ndarray
    xi_dot: np.ndarray
    eta_dot: np.ndarray

    def __post_init__(self) -> None:
        self.xi = np.asarray(self.xi, dtype=float).reshape(3)
        self.eta = np.asarray(self.eta, dtype=float).reshape(3)
        self.xi_dot = np.asarray(self.xi_dot, dtype=float).reshape(3)
        self.eta_dot = np.asarray(self.eta_dot, dtype=float).reshape(3)

    @classmethod
    def rest(cls, xi=(0.0, 0.0, 0.0)) -> "State":
        return cls(np.asarray(xi, dtype=float), np.zeros(3), np.zeros(3), np.zeros(3))

    def copy(self) -> "State":
        return State(self.xi.copy(), self.eta.copy(), self.xi_dot.copy(), self.eta_dot.copy())

    def body_velocity(self) -> np.ndarray:
        return rotation_matrix(self.eta).T @ self.xi_dot

    def body_angular_velocity(self) -> np.ndarray:
        return psi_matrix(self.eta) @ self.eta_dot


@dataclass
class PhysicalParams:
    """Mass, inertia and geometry of the vehicle.

    m: mass [kg]; j: principal inertias (J_x, J_y, J_z) [kg m^2];
    d: wheel diameter [m]; l: axle length [m]; e: restitution coefficient;
    g: gravitational acceleration [m/s^2].
    """

    m: float = 0.938
    j: np.ndarray = field(default_factory=lambda: np.array([0.00933, 0.00285, 0.01130]))
    d: float = 0.28
    l: float = 0.35
    e: float = 0.1
    g: float = 9.81

    def __post_init__(self) -> None:
        self.j = np.asarray(self.j, dtype=float).reshape(3)
        if self.m <= 0.0:
            raise ValueError("mass must be positive")
        if np.any(self.j <= 0.0):
            raise ValueError("principal inertias must be positive")
        if self.d <= 0.0 or self.l < 0.0:
            raise ValueError("wheel diameter must be positive, axle length nonnegative")
        if not 0.0 <= self.e <= 1.0:
            raise ValueError("restitution coefficient must lie in [0, 1]")
        if self.g <= 0.0:
            raise ValueError("gravity must be positive")

    @property
    def j_matrix(self) -> np.ndarray:
        return np.diag(self.j)


@dataclass
class ModeParams:
    """Mode-selection thresholds: clearance factor alpha >= 1 and the
    switch altitude below which some roll angle still allows wheel contact."""

    alpha: float
    switch_altitude: float

    def __post_init__(self) -> None:
        if self.alpha < 1.0:
            raise ValueError("alpha must be >= 1")
        if self.switch_altitude <= 0.0:
            raise ValueError("switch altitude must be positive")

    @property
    def threshold(self) -> float:
        return self.alpha * self.switch_altitude

    @classmethod
    def from_geometry(cls, params: PhysicalParams, alpha: float = 1.5) -> "ModeParams":
        return cls(alpha=alpha, switch_altitude=switch_altitude(params.d, params.l))


@dataclass
class ConstraintForces:
    """Lagrange multipliers of the ground constraints while driving.

    lambda1: normal reaction [N] (<= 0 while contact is maintained);
    lambda2: lateral no-skid force [N]; lambda3: roll-lock torque [N m].
    All three vanish off the ground.
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3])


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(a) @ b == cross(a, b)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def thrust_axis(psi, theta, phi):
    """Components of the body z-axis (thrust direction) in the inertial
    frame, i.e. the third column of the rotation matrix.

    Accepts scalars or equally shaped arrays; returns (x, y, z) with the
    input shape, which lets planner rollouts evaluate whole sample batches.
    """
    sps, cps = np.sin(psi), np.cos(psi)
    sth, cth = np.sin(theta), np.cos(theta)
    sph, cph = np.sin(phi), np.cos(phi)
    return (
        cph * sth * cps + sph * sps,
        cph * sth * sps - sph * cps,
        cph * cth,
    )


def rotation_matrix(eta: np.ndarray) -> np.ndarray:
    """Body-to-inertial rotation matrix for ZYX Euler angles (psi, theta, phi)."""
    psi, theta, phi = np.asarray(eta, dtype=float).reshape(3)
    sps, cps = np.sin(psi), np.cos(psi)
    sth, cth = np.sin(theta), np.cos(theta)
    sph, cph = np.sin(phi), np.cos(phi)
    return np.array(
        [
            [cth * cps, sph * sth * cps - cph * sps, cph * sth * cps + sph * sps],
            [cth * sps, sph * sth * sps + cph * cps, cph * sth * sps - sph * cps],
            [-sth, sph * cth, cph * cth],
        ]
    )


def _check_pitch(theta: float) -> float:
    cth = float(np.cos(theta))
    if abs(cth) < COS_PITCH_MIN:
        raise SingularAttitudeError(f"pitch {theta:.6f} rad too close to +-pi/2")
    return cth


def euler_rate_matrix(eta: np.ndarray) -> np.ndarray:
    """Matrix Phi mapping body angular velocity to Euler rates: eta_dot = Phi Omega.

    Raises SingularAttitudeError when |cos(theta)| < 1e-6.
    """
    _, theta, phi = np.asarray(eta, dtype=float).reshape(3)
    cth = _check_pitch(theta)
    sth = np.sin(theta)
    sph, cph = np.sin(phi), np.cos(phi)
    tth = sth / cth
    return np.array(
        [
            [0.0, sph / cth, cph / cth],
            [0.0, cph, -sph],
            [1.0, sph * tth, cph * tth],
        ]
    )


def psi_matrix(eta: np.ndarray) -> np.ndarray:
    """Inverse Euler-rate matrix Psi = Phi^-1: Omega = Psi eta_dot."""
    _, theta, phi = np.asarray(eta, dtype=float).reshape(3)
    _check_pitch(theta)
    sth, cth = np.sin(theta), np.cos(theta)
    sph, cph = np.sin(phi), np.cos(phi)
    return np.array(
        [
            [-sth, 0.0, 1.0],
            [cth * sph, cph, 0.0],
            [cth * cph, -sph, 0.0],
        ]
    )


def psi_matrix_rate(eta: np.ndarray, eta_dot: np.ndarray) -> np.ndarray:
    """Time derivative of Psi along eta_dot, from the analytic partials
    in theta and phi (Psi does not depend on yaw)."""
    _, theta, phi = np.asarray(eta, dtype=float).reshape(3)
    _, theta_dot, phi_dot = np.asarray(eta_dot, dtype=float).reshape(3)
    sth, cth = np.sin(theta), np.cos(theta)
    sph, cph = np.sin(phi), np.cos(phi)
    d_theta = np.array(
        [
            [-cth, 0.0, 0.0],
            [-sth * sph, 0.0, 0.0],
            [-sth * cph, 0.0, 0.0],
        ]
    )
    d_phi = np.array(
        [
            [0.0, 0.0, 0.0],
            [cth * cph, -sph, 0.0],
            [-cth * sph, -cph, 0.0],
        ]
    )
    return d_theta * theta_dot + d_phi * phi_dot


def mass_matrix(eta: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Generalized inertia in Euler-angle coordinates: M = Psi^T J Psi."""
    psi_m = psi_matrix(eta)
    return psi_m.T @ params.j_matrix @ psi_m


def coriolis_matrix(eta: np.ndarray, eta_dot: np.ndarray, params: PhysicalParams) -> np.ndarray:
    """Coriolis/centrifugal matrix C = Psi^T J Psi_dot + Psi^T sk(Psi eta_dot) J Psi."""
    psi_m = psi_matrix(eta)
    psi_dot = psi_matrix_rate(eta, eta_dot)
    j = params.j_matrix
    omega = psi_m @ np.asarray(eta_dot, dtype=float).reshape(3)
    return psi_m.T @ j @ psi_dot + psi_m.T @ skew(omega) @ j @ psi_m


def switch_altitude(d: float, l: float) -> float:
    """Lowest altitude above which no roll angle can bring a wheel into
    ground contact: max over roll of the lowest wheel-rim point, in closed
    form sqrt((d/2)^2 + (l/2)^2) - d/2."""
    if d <= 0.0:
        raise ValueError("wheel diameter must be positive")
    if l < 0.0:
        raise ValueError("axle length must be nonnegative")
    half_d = 0.5 * d
    half_l = 0.5 * l
    return float(np.hypot(half_d, half_l) - half_d)


def select_mode(xi_z: float, mode_params: ModeParams) -> Mode:
    """Altitude -> mode: contact, near-ground, or free flight."""
    if xi_z <= GROUND_EPS:
        return Mode.O_GROUND
    if xi_z <= mode_params.threshold:
        return Mode.N_GROUND
    return Mode.FLIGHT


def pfaffian_translation(psi: float) -> np.ndarray:
    """Velocity-level constraint rows on xi_dot while driving: ground
    height (row 1) and no lateral skid (row 2, heading-dependent)."""
    return np.array([[0.0, 0.0, 1.0], [-np.sin(psi), np.cos(psi), 0.0]])


A_ETA = np.array([[0.0, 0.0, 1.0]])  # roll-lock constraint row on eta_dot


def constraint_forces(
    state: State, f: float, tau: np.ndarray, mode: Mode, params: PhysicalParams
) -> ConstraintForces:
    """Ground-contact Lagrange multipliers for the current state and inputs.

    Off the ground all multipliers are zero. While driving, (lambda1,
    lambda2) enforce the height and no-skid constraints on the
    translational dynamics and lambda3 locks the roll channel. lambda1 > 0
    would require the ground to pull; callers treat that as detachment.
    """
    if mode is not Mode.O_GROUND:
        return ConstraintForces()

    psi = state.eta[0]
    psi_dot = state.eta_dot[0]
    a_xi = pfaffian_translation(psi)
    # Row 1 of A_xi is constant; row 2 rotates with the heading.
    a_xi_dot_row2 = np.array([-np.cos(psi) * psi_dot, -np.sin(psi) * psi_dot, 0.0])

    thrust_world = f * rotation_matrix(state.eta) @ E_Z
    resid = thrust_world - params.m * params.g * E_Z
    lambda1 = float(a_xi[0] @ resid)
    lambda2 = float(params.m * (a_xi_dot_row2 @ state.xi_dot) + a_xi[1] @ resid)

    m_mat = mass_matrix(state.eta, params)
    m_inv = np.linalg.inv(m_mat)
    rhs = psi_matrix(state.eta).T @ np.asarray(tau, dtype=float).reshape(3) - coriolis_matrix(
        state.eta, state.eta_dot, params
    ) @ state.eta_dot
    denom = float(m_inv[2, 2])  # A_eta M^-1 A_eta^T selects the roll-roll entry
    if abs(denom) < LAMBDA3_DENOM_MIN:
        lambda3 = 0.0
    else:
        lambda3 = float(m_inv[2] @ rhs) / denom
    return ConstraintForces(lambda1, lambda2, lambda3)


def continuous_dynamics(
    state: State, f: float, tau: np.ndarray, mode: Mode, params: PhysicalParams
) -> tuple[np.ndarray, np.ndarray]:
    """Accelerations (xi_ddot, eta_ddot) of the constrained Euler-Lagrange
    dynamics.

    In contact the constraint forces keep the vehicle on the ground plane
    and skid-free; if the required normal reaction turns tensile
    (lambda1 > 0) the constraints are dropped for this evaluation and the
    body is treated as airborne.
    """
    tau = np.asarray(tau, dtype=float).reshape(3)
    thrust_world = f * rotation_matrix(state.eta) @ E_Z
    force = thrust_world - params.m * params.g * E_Z

    forces = constraint_forces(state, f, tau, mode, params)
    constrained = mode is Mode.O_GROUND and forces.lambda1 <= 0.0
    if constrained:
        a_xi = pfaffian_translation(state.eta[0])
        force = force - a_xi.T @ np.array([forces.lambda1, forces.lambda2])
    xi_ddot = force / params.m

    m_mat = mass_matrix(state.eta, params)
    rhs = psi_matrix(state.eta).T @ tau - coriolis_matrix(state.eta, state.eta_dot, params) @ state.eta_dot
    if constrained:
        rhs = rhs - forces.lambda3 * A_ETA[0]
    eta_ddot = np.linalg.solve(m_mat, rhs)
    return xi_ddot, eta_ddot


def impulse_velocity(eta_minus, xi_dot_minus, e: float):
    """Inertial velocity after ground impact.

    The roll angle is zeroed first (both wheels land together), the lateral
    body velocity is wiped by the new no-skid constraint, and the normal
    component rebounds scaled by -e. Broadcasts over leading axes, so the
    planner can apply it to sample batches.
    """
    eta_minus = np.asarray(eta_minus, dtype=float)
    xi_dot_minus = np.asarray(xi_dot_minus, dtype=float)
    psi = eta_minus[..., 0]
    theta = eta_minus[..., 1]
    zero = np.zeros_like(psi)

    sps, cps = np.sin(psi), np.cos(psi)
    sth, cth = np.sin(theta), np.cos(theta)
    # Rotation at the contact attitude (roll already zeroed).
    r = np.stack(
        [
            np.stack([cth * cps, -sps, sth * cps], axis=-1),
            np.stack([cth * sps, cps, sth * sps], axis=-1),
            np.stack([-sth, zero, cth], axis=-1),
        ],
        axis=-2,
    )
    v_body = np.einsum("...ji,...j->...i", r, xi_dot_minus)
    v_body = v_body * np.array([1.0, 0.0, 1.0])
    v_world = np.einsum("...ij,...j->...i", r, v_body)
    return v_world * np.array([1.0, 1.0, -float(e)])


def contact_impulse(state_minus: State, params: PhysicalParams) -> State:
    """Discontinuous state reset at the moment of ground contact.

    Roll and roll rate are zeroed, the velocity passes through the
    restitution/no-skid map at the rolled-flat attitude, and the position
    is unchanged.
    """
    eta_plus = T3 @ state_minus.eta
    eta_dot_plus = T3 @ state_minus.eta_dot
    xi_dot_plus = impulse_velocity(eta_plus, state_minus.xi_dot, params.e)
    return State(state_minus.xi.copy(), eta_plus, xi_dot_plus, eta_dot_plus)
