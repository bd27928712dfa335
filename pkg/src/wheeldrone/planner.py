"""Sampling-based motion planner with a mode-dependent input space.

Each control step draws K noisy input sequences around a prior, rolls them
through a contact-aware transition model, scores them against the
reference trajectory and the obstacle indicator, and returns the
softmax-weighted average sequence. The prior mixes the previous optimal
solution with a rollout of the auxiliary gravity-compensating controller;
the auxiliary slice is what lets the optimizer find the abrupt thrust
increase needed to leave the ground.

The input is u = [f, psi_d, theta_d, phi_d]. Near the ground the roll
reference is forced to zero (both wheels must land together); in flight
the yaw reference is forced to zero (yaw does not move the thrust axis).

The rollout transition model integrates only the translational dynamics
and snaps the attitude to its reference, treating the attitude loop as
ideal; the ground reaction and no-skid forces act while a rollout state is
on the ground, and the descending crossing of the ground plane triggers
the impulsive contact map at the exact crossing instant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numba
import numpy as np

from .controllers import AuxGains, auxiliary_input
from .dynamics import (
    GROUND_EPS,
    Mode,
    ModeParams,
    PhysicalParams,
    State,
    select_mode,
)
from .environment import Scenario, collision_mask, reference_at


@dataclass
class ControlInput:
    """One planner output: total thrust and the reference attitude."""

    f: float
    psi_d: float
    theta_d: float
    phi_d: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.psi_d, self.theta_d, self.phi_d])

    @classmethod
    def from_array(cls, u: np.ndarray) -> "ControlInput":
        u = np.asarray(u, dtype=float).reshape(4)
        return cls(float(u[0]), float(u[1]), float(u[2]), float(u[3]))

    @property
    def eta_d(self) -> np.ndarray:
        return np.array([self.psi_d, self.theta_d, self.phi_d])


@dataclass
class PlannerConfig:
    """Sample counts, horizon, noise, and cost weights of the planner."""

    samples: int = 1500
    aux_samples: int = 300
    horizon: int = 75
    temperature: float = 10.0
    sigma: np.ndarray = field(default_factory=lambda: np.array([2.25, 0.03, 0.03, 0.03]))
    dt: float = 0.02
    w_xi: np.ndarray = field(default_factory=lambda: 1e4 * np.array([0.9, 1.2, 0.3]))
    w_xi_dot: np.ndarray = field(default_factory=lambda: 1e4 * np.array([0.9, 1.2, 0.15]))
    w_xi_term: np.ndarray = field(default_factory=lambda: 1e4 * np.array([0.75, 1.0, 0.275]))
    w_xi_dot_term: np.ndarray = field(default_factory=lambda: 1e4 * np.array([0.25, 0.25, 0.125]))
    w_u: np.ndarray = field(default_factory=lambda: np.array([3.2, 1.6, 1.6, 1.6]))
    w_obs: float = 1e6
    f_max: float = 2.0 * 0.938 * 9.81
    angle_max: float = 0.35
    yaw_max: float = 1.2
    obstacle_margin: float = 0.05
    shift_warm_start: bool = True
    aux_roll_in_flight: bool = False
    rng_seed: int | None = None

    def __post_init__(self) -> None:
        self.sigma = np.asarray(self.sigma, dtype=float).reshape(4)
        self.w_xi = np.asarray(self.w_xi, dtype=float).reshape(3)
        self.w_xi_dot = np.asarray(self.w_xi_dot, dtype=float).reshape(3)
        self.w_xi_term = np.asarray(self.w_xi_term, dtype=float).reshape(3)
        self.w_xi_dot_term = np.asarray(self.w_xi_dot_term, dtype=float).reshape(3)
        self.w_u = np.asarray(self.w_u, dtype=float).reshape(4)

    def validate(self) -> None:
        if self.samples < 1:
            raise ValueError("K must be >= 1")
        if not 0 <= self.aux_samples <= self.samples:
            raise ValueError("K_aux must lie in [0, K]")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if np.any(self.sigma < 0.0):
            raise ValueError("noise variances must be nonnegative")
        if self.dt <= 0.0:
            raise ValueError("planning step must be positive")
        for w in (self.w_xi, self.w_xi_dot, self.w_xi_term, self.w_xi_dot_term, self.w_u):
            if np.any(w < 0.0):
                raise ValueError("cost weights must be nonnegative")
        if self.w_obs < 0.0:
            raise ValueError("obstacle weight must be nonnegative")
        if self.f_max <= 0.0 or self.angle_max <= 0.0 or self.yaw_max <= 0.0:
            raise ValueError("input clamps must be positive")
        if self.obstacle_margin < 0.0:
            raise ValueError("obstacle margin must be nonnegative")

    @property
    def inv_sigma(self) -> np.ndarray:
        """Elementwise inverse of the noise variances; zero-variance
        channels contribute nothing to the input regularizer."""
        out = np.zeros(4)
        positive = self.sigma > 0.0
        out[positive] = 1.0 / self.sigma[positive]
        return out


@dataclass
class MppiDiagnostics:
    """Per-step solver diagnostics."""

    min_cost: float
    mean_cost: float
    ess: float
    weights: np.ndarray
    degenerate: bool = False


def _project_inplace(u: np.ndarray, mode: Mode, config: PlannerConfig) -> np.ndarray:
    np.clip(u[..., 0], 0.0, config.f_max, out=u[..., 0])
    np.clip(u[..., 1], -config.yaw_max, config.yaw_max, out=u[..., 1])
    np.clip(u[..., 2], -config.angle_max, config.angle_max, out=u[..., 2])
    np.clip(u[..., 3], -config.angle_max, config.angle_max, out=u[..., 3])
    if mode is Mode.FLIGHT:
        u[..., 1] = 0.0
    else:
        u[..., 3] = 0.0
    return u


def project_input_array(u_raw: np.ndarray, mode: Mode, config: PlannerConfig) -> np.ndarray:
    """Clamp and project raw inputs onto the mode's input space.

    Thrust is clamped to [0, f_max], pitch and roll references to
    +-angle_max, the yaw reference to +-yaw_max (steering needs a wider
    range than the tilt channels). Ground modes zero the roll reference;
    flight zeroes the yaw reference. Works on any (..., 4) array.
    """
    return _project_inplace(np.array(u_raw, dtype=float, copy=True), mode, config)


def project_input(u_raw: np.ndarray, mode: Mode, config: PlannerConfig | None = None) -> ControlInput:
    """Single-input version of the mode projection."""
    if config is None:
        config = PlannerConfig()
    return ControlInput.from_array(project_input_array(np.asarray(u_raw, dtype=float).reshape(4), mode, config))


@numba.njit(cache=True)
def _step_rows(xi, eta, xi_dot, eta_dot, u, dt, m, g, e, eps):
    """One in-place transition step for rollout-state rows, shape (K, 3)/(K, 4).

    Forward-Euler translational step with ground reaction while a row is on
    the ground, descending at most, and the unilateral reaction stays
    compressive; a descending ground-plane crossing instead advances to the
    crossing instant and applies the impulsive contact map. The attitude
    snaps to its reference and the rates are the consistent finite
    differences.
    """
    n = xi.shape[0]
    for k in range(n):
        f = u[k, 0]
        psi_d = u[k, 1]
        theta_d = u[k, 2]
        phi_d = u[k, 3]
        z = xi[k, 2]
        vz = xi_dot[k, 2]
        psi = eta[k, 0]
        theta = eta[k, 1]
        phi = eta[k, 2]

        if z > 0.0 and z + vz * dt <= 0.0:
            # impact inside the step: advance to the crossing, zero the
            # roll, and pass the velocity through the restitution /
            # no-skid map at the rolled-flat attitude
            dt_bar = -z / vz
            xi[k, 0] = xi[k, 0] + xi_dot[k, 0] * dt_bar
            xi[k, 1] = xi[k, 1] + xi_dot[k, 1] * dt_bar
            xi[k, 2] = 0.0
            sps, cps = np.sin(psi), np.cos(psi)
            sth, cth = np.sin(theta), np.cos(theta)
            vx = xi_dot[k, 0]
            vy = xi_dot[k, 1]
            # body components (lateral wiped), then back to the inertial
            # frame with the vertical part rebounding at -e
            vbx = cth * cps * vx + cth * sps * vy + (-sth) * vz
            vbz = sth * cps * vx + sth * sps * vy + cth * vz
            xi_dot[k, 0] = cth * cps * vbx + sth * cps * vbz
            xi_dot[k, 1] = cth * sps * vbx + sth * sps * vbz
            xi_dot[k, 2] = ((-sth) * vbx + cth * vbz) * (-e)
            eta_dot[k, 0] = (psi_d - psi) / dt_bar
            eta_dot[k, 1] = (theta_d - theta) / dt_bar
            eta_dot[k, 2] = 0.0
            eta[k, 0] = psi_d
            eta[k, 1] = theta_d
            eta[k, 2] = 0.0
        else:
            sps, cps = np.sin(psi), np.cos(psi)
            sth, cth = np.sin(theta), np.cos(theta)
            sph, cph = np.sin(phi), np.cos(phi)
            bx = cph * sth * cps + sph * sps
            by = cph * sth * sps - sph * cps
            bz = cph * cth
            # ground reaction: lambda1 balances the vertical residual,
            # lambda2 the lateral skid force; a tensile lambda1 (> 0)
            # means lift-off, and an ascending row is already airborne
            lam1 = f * bz - m * g
            psi_dot = eta_dot[k, 0]
            lam2 = m * (-cps * psi_dot * xi_dot[k, 0] - sps * psi_dot * xi_dot[k, 1]) + f * (
                -sps * bx + cps * by
            )
            if not (z <= eps and vz <= 0.0 and lam1 <= 0.0):
                lam1 = 0.0
                lam2 = 0.0
            ax = (f * bx + sps * lam2) / m
            ay = (f * by - cps * lam2) / m
            az = (f * bz - m * g - lam1) / m
            xi[k, 0] = xi[k, 0] + xi_dot[k, 0] * dt
            xi[k, 1] = xi[k, 1] + xi_dot[k, 1] * dt
            xi[k, 2] = xi[k, 2] + xi_dot[k, 2] * dt
            xi_dot[k, 0] = xi_dot[k, 0] + ax * dt
            xi_dot[k, 1] = xi_dot[k, 1] + ay * dt
            xi_dot[k, 2] = xi_dot[k, 2] + az * dt
            eta_dot[k, 0] = (psi_d - psi) / dt
            eta_dot[k, 1] = (theta_d - theta) / dt
            eta_dot[k, 2] = (phi_d - phi) / dt
            eta[k, 0] = psi_d
            eta[k, 1] = theta_d
            eta[k, 2] = phi_d


@numba.njit(cache=True)
def _collides(px, py, pz, obs_p, obs_a, obs_lim):
    for i in range(obs_p.shape[0]):
        r0 = px - obs_p[i, 0]
        r1 = py - obs_p[i, 1]
        r2 = pz - obs_p[i, 2]
        along = r0 * obs_a[i, 0] + r1 * obs_a[i, 1] + r2 * obs_a[i, 2]
        q0 = r0 - along * obs_a[i, 0]
        q1 = r1 - along * obs_a[i, 1]
        q2 = r2 - along * obs_a[i, 2]
        if np.sqrt(q0 * q0 + q1 * q1 + q2 * q2) <= obs_lim[i]:
            return True
    return False


@numba.njit(cache=True)
def _rollout_costs(
    xi, eta, xi_dot, eta_dot, u_seq,
    ref_p, ref_v,
    w_xi, w_xid, w_u, inv_sigma, lam_half, w_obs,
    w_xi_t, w_xid_t,
    obs_p, obs_a, obs_lim,
    dt, m, g, e, eps,
):
    """Total objective of each sample sequence; mutates the state rows."""
    n, horizon = u_seq.shape[0], u_seq.shape[1]
    costs = np.zeros(n)
    for j in range(horizon):
        for k in range(n):
            e0 = xi[k, 0] - ref_p[j, 0]
            e1 = xi[k, 1] - ref_p[j, 1]
            e2 = xi[k, 2] - ref_p[j, 2]
            d0 = xi_dot[k, 0] - ref_v[j, 0]
            d1 = xi_dot[k, 1] - ref_v[j, 1]
            d2 = xi_dot[k, 2] - ref_v[j, 2]
            u0 = u_seq[k, j, 0]
            u1 = u_seq[k, j, 1]
            u2 = u_seq[k, j, 2]
            u3 = u_seq[k, j, 3]
            stage = (
                (w_xi[0] * e0 * e0 + w_xi[1] * e1 * e1 + w_xi[2] * e2 * e2)
                + (w_xid[0] * d0 * d0 + w_xid[1] * d1 * d1 + w_xid[2] * d2 * d2)
                + (w_u[0] * u0 * u0 + w_u[1] * u1 * u1 + w_u[2] * u2 * u2 + w_u[3] * u3 * u3)
            )
            if _collides(xi[k, 0], xi[k, 1], xi[k, 2], obs_p, obs_a, obs_lim):
                stage = stage + w_obs
            reg = lam_half * (
                inv_sigma[0] * u0 * u0
                + inv_sigma[1] * u1 * u1
                + inv_sigma[2] * u2 * u2
                + inv_sigma[3] * u3 * u3
            )
            costs[k] = costs[k] + (stage + reg)
        _step_rows(xi, eta, xi_dot, eta_dot, u_seq[:, j, :], dt, m, g, e, eps)
    for k in range(n):
        e0 = xi[k, 0] - ref_p[horizon, 0]
        e1 = xi[k, 1] - ref_p[horizon, 1]
        e2 = xi[k, 2] - ref_p[horizon, 2]
        d0 = xi_dot[k, 0] - ref_v[horizon, 0]
        d1 = xi_dot[k, 1] - ref_v[horizon, 1]
        d2 = xi_dot[k, 2] - ref_v[horizon, 2]
        term = (w_xi_t[0] * e0 * e0 + w_xi_t[1] * e1 * e1 + w_xi_t[2] * e2 * e2) + (
            w_xid_t[0] * d0 * d0 + w_xid_t[1] * d1 * d1 + w_xid_t[2] * d2 * d2
        )
        costs[k] = costs[k] + term
    return costs


def transition(x_j: State, u: ControlInput, config: PlannerConfig, params: PhysicalParams) -> State:
    """Single-state rollout transition (same kernel as the sample batches)."""
    xi = x_j.xi.copy().reshape(1, 3)
    eta = x_j.eta.copy().reshape(1, 3)
    xi_dot = x_j.xi_dot.copy().reshape(1, 3)
    eta_dot = x_j.eta_dot.copy().reshape(1, 3)
    _step_rows(
        xi, eta, xi_dot, eta_dot, u.as_array().reshape(1, 4),
        config.dt, params.m, params.g, params.e, GROUND_EPS,
    )
    return State(xi[0], eta[0], xi_dot[0], eta_dot[0])


def running_cost(
    x: State, u: ControlInput | np.ndarray, t: float, scenario: Scenario, config: PlannerConfig
) -> float:
    """Stage cost: weighted tracking errors against the reference at the
    step's absolute time, input magnitude, and the obstacle indicator."""
    u_arr = u.as_array() if isinstance(u, ControlInput) else np.asarray(u, dtype=float).reshape(4)
    ref = reference_at(t, scenario)
    e = x.xi - ref.xi_d
    ed = x.xi_dot - ref.xi_dot_d
    w, wd, wu = config.w_xi, config.w_xi_dot, config.w_u
    cost = (
        (w[0] * e[0] * e[0] + w[1] * e[1] * e[1] + w[2] * e[2] * e[2])
        + (wd[0] * ed[0] * ed[0] + wd[1] * ed[1] * ed[1] + wd[2] * ed[2] * ed[2])
        + (
            wu[0] * u_arr[0] * u_arr[0]
            + wu[1] * u_arr[1] * u_arr[1]
            + wu[2] * u_arr[2] * u_arr[2]
            + wu[3] * u_arr[3] * u_arr[3]
        )
    )
    if collision_mask(x.xi, scenario, config.obstacle_margin):
        cost = cost + config.w_obs
    return float(cost)


def terminal_cost(x: State, t: float, scenario: Scenario, config: PlannerConfig) -> float:
    """Terminal tracking cost; no input or obstacle term."""
    ref = reference_at(t, scenario)
    e = x.xi - ref.xi_d
    ed = x.xi_dot - ref.xi_dot_d
    w, wd = config.w_xi_term, config.w_xi_dot_term
    return float(
        (w[0] * e[0] * e[0] + w[1] * e[1] * e[1] + w[2] * e[2] * e[2])
        + (wd[0] * ed[0] * ed[0] + wd[1] * ed[1] * ed[1] + wd[2] * ed[2] * ed[2])
    )


def input_regularization(u: ControlInput | np.ndarray, config: PlannerConfig) -> float:
    """The (temperature / 2) u^T Sigma^-1 u term added to each stage."""
    u_arr = u.as_array() if isinstance(u, ControlInput) else np.asarray(u, dtype=float).reshape(4)
    s = config.inv_sigma
    lam_half = 0.5 * config.temperature
    return float(
        lam_half
        * (
            s[0] * u_arr[0] * u_arr[0]
            + s[1] * u_arr[1] * u_arr[1]
            + s[2] * u_arr[2] * u_arr[2]
            + s[3] * u_arr[3] * u_arr[3]
        )
    )


def build_prior(
    u_prev: np.ndarray, aux_seq: np.ndarray | None, samples: int, aux_samples: int
) -> np.ndarray:
    """Per-sample prior sequences, shape (K, T, 4): the first K_aux samples
    are centered on the auxiliary rollout, the rest on the previous optimal
    solution."""
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.ndim != 2 or u_prev.shape[1] != 4:
        raise ValueError("previous solution must have shape (T, 4)")
    horizon = u_prev.shape[0]
    if aux_samples > 0:
        if aux_seq is None:
            raise ValueError("auxiliary sequence required when K_aux > 0")
        aux_seq = np.asarray(aux_seq, dtype=float)
        if aux_seq.shape != u_prev.shape:
            raise ValueError(
                f"auxiliary sequence shape {aux_seq.shape} does not match prior {u_prev.shape}"
            )
    prior = np.empty((samples, horizon, 4))
    prior[aux_samples:] = u_prev
    if aux_samples > 0:
        prior[:aux_samples] = aux_seq
    return prior


def aux_rollout(
    x0: State,
    t0: float,
    scenario: Scenario,
    gains: AuxGains,
    config: PlannerConfig,
    params: PhysicalParams,
    mode_params: ModeParams,
) -> np.ndarray:
    """Roll the auxiliary controller through the transition model over the
    horizon, projecting each command onto the input space of the mode the
    rollout state is in at that step. Returns a (T, 4) input sequence."""
    seq = np.empty((config.horizon, 4))
    state = x0.copy()
    for j in range(config.horizon):
        ref = reference_at(t0 + j * config.dt, scenario)
        u_raw = auxiliary_input(state.xi, state.xi_dot, ref.xi_d, ref.xi_dot_d, gains, params)
        mode_j = select_mode(state.xi[2], mode_params)
        if config.aux_roll_in_flight and mode_j is Mode.FLIGHT:
            # Optional remap: use the lateral-tilt command as a roll
            # reference in flight, where yaw cannot tilt the thrust.
            u_raw = np.array([u_raw[0], 0.0, u_raw[2], u_raw[1]])
        u_proj = project_input_array(u_raw, mode_j, config)
        seq[j] = u_proj
        state = transition(state, ControlInput.from_array(u_proj), config, params)
    return seq


def _batch_costs(
    x0: State,
    u_samples: np.ndarray,
    t0: float,
    scenario: Scenario,
    config: PlannerConfig,
    params: PhysicalParams,
) -> np.ndarray:
    """Total objective of each sample sequence, shape (K,)."""
    n_samples, horizon, _ = u_samples.shape
    xi = np.tile(x0.xi, (n_samples, 1))
    eta = np.tile(x0.eta, (n_samples, 1))
    xi_dot = np.tile(x0.xi_dot, (n_samples, 1))
    eta_dot = np.tile(x0.eta_dot, (n_samples, 1))

    ref_p = np.empty((horizon + 1, 3))
    ref_v = np.empty((horizon + 1, 3))
    for j in range(horizon + 1):
        ref = reference_at(t0 + j * config.dt, scenario)
        ref_p[j] = ref.xi_d
        ref_v[j] = ref.xi_dot_d

    n_obs = len(scenario.obstacles)
    obs_p = np.empty((n_obs, 3))
    obs_a = np.empty((n_obs, 3))
    obs_lim = np.empty(n_obs)
    for i, obs in enumerate(scenario.obstacles):
        obs_p[i] = obs.point
        obs_a[i] = obs.axis
        obs_lim[i] = obs.radius + scenario.inflation + config.obstacle_margin

    return _rollout_costs(
        xi, eta, xi_dot, eta_dot, np.ascontiguousarray(u_samples),
        ref_p, ref_v,
        config.w_xi, config.w_xi_dot, config.w_u, config.inv_sigma,
        0.5 * config.temperature, config.w_obs,
        config.w_xi_term, config.w_xi_dot_term,
        obs_p, obs_a, obs_lim,
        config.dt, params.m, params.g, params.e, GROUND_EPS,
    )


def mppi_step(
    x: State,
    u_prev: np.ndarray,
    aux_seq: np.ndarray | None,
    mode: Mode,
    t0: float,
    scenario: Scenario,
    config: PlannerConfig,
    params: PhysicalParams,
    rng: np.random.Generator,
) -> tuple[ControlInput, np.ndarray, MppiDiagnostics]:
    """One planning step: sample, roll out, softmax-average.

    Returns the first input, the full optimized (T, 4) sequence, and
    diagnostics. Samples with non-finite cost get zero weight; if every
    sample is non-finite the better of the two noise-free prior sequences
    is returned and a degenerate-solve warning is raised.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    prior = build_prior(u_prev, aux_seq, config.samples, config.aux_samples)
    noise = rng.standard_normal(prior.shape)
    noise *= np.sqrt(config.sigma)
    prior += noise
    u_samples = _project_inplace(prior, mode, config)
    costs = _batch_costs(x, u_samples, t0, scenario, config, params)

    finite = np.isfinite(costs)
    if not finite.any():
        return _degenerate_fallback(x, u_prev, aux_seq, mode, t0, scenario, config, params)

    min_cost = float(costs[finite].min())
    weights = np.zeros(config.samples)
    weights[finite] = np.exp(-(costs[finite] - min_cost) / config.temperature)
    weights /= weights.sum()

    # Averaging deviations around the projected warm start keeps the
    # forbidden input slot exactly zero and makes the zero-noise case
    # return the prior bit-for-bit.
    base = project_input_array(u_prev, mode, config)
    u_star = base + np.einsum("k,ktj->tj", weights, u_samples - base)

    ess = float(1.0 / (weights @ weights))
    diag = MppiDiagnostics(
        min_cost=min_cost,
        mean_cost=float(costs[finite].mean()),
        ess=ess,
        weights=weights,
    )
    return ControlInput.from_array(u_star[0]), u_star, diag


def _degenerate_fallback(x, u_prev, aux_seq, mode, t0, scenario, config, params):
    warnings.warn("all rollout costs non-finite; returning noise-free prior", RuntimeWarning)
    candidates = [project_input_array(u_prev, mode, config)]
    if aux_seq is not None:
        candidates.append(project_input_array(np.asarray(aux_seq, dtype=float), mode, config))
    cand_costs = [
        _batch_costs(x, c[None, :, :], t0, scenario, config, params)[0] for c in candidates
    ]
    order = np.argsort([c if np.isfinite(c) else np.inf for c in cand_costs])
    best = candidates[int(order[0])]
    diag = MppiDiagnostics(
        min_cost=float("nan"),
        mean_cost=float("nan"),
        ess=0.0,
        weights=np.zeros(config.samples),
        degenerate=True,
    )
    return ControlInput.from_array(best[0]), best, diag
