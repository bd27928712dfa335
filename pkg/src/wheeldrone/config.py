"""Run configuration: JSON schema, defaults, validation and resolution.

A run configuration document holds five sections (physical, mode,
scenario, planner, sim, gains) plus an output directory. Every field has
a default reproducing the reference experiment, so an empty document is a
valid configuration. The scenario section may be an inline object or a
path to a separate scenario JSON file. Units are meters, seconds,
radians, kilograms, newtons throughout.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass

import numpy as np

from .controllers import AttitudeGains, AuxGains
from .dynamics import ModeParams, PhysicalParams, switch_altitude
from .environment import Scenario, default_scenario, inflation_radius, scenario_from_dict, scenario_to_dict
from .planner import PlannerConfig
from .simulator import SimConfig


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


DEFAULTS: dict = {
    "physical": {
        "mass": 0.938,
        "inertia": [0.00933, 0.00285, 0.01130],
        "wheel_diameter": 0.28,
        "axle_length": 0.35,
        "restitution": 0.1,
        "gravity": 9.81,
    },
    "mode": {"alpha": 1.5},
    "scenario": None,  # None -> built-in three-cylinder course
    "planner": {
        "samples": 1500,
        "aux_samples": 300,
        "horizon": 75,
        "temperature": 10.0,
        "noise_variance": [2.25, 0.03, 0.03, 0.03],
        "dt": 0.02,
        "w_xi": [9000.0, 12000.0, 3000.0],
        "w_xi_dot": [9000.0, 12000.0, 1500.0],
        "w_xi_term": [7500.0, 10000.0, 2750.0],
        "w_xi_dot_term": [2500.0, 2500.0, 1250.0],
        "w_u": [3.2, 1.6, 1.6, 1.6],
        "w_obs": 1e6,
        "f_max": None,  # None -> 2 * m * g
        "angle_max": 0.35,
        "yaw_max": 1.2,
        "obstacle_margin": 0.03,
        "shift_warm_start": True,
        "aux_roll_in_flight": False,
    },
    "sim": {
        "control_dt": 0.02,
        "plant_substeps": 10,
        "duration": 12.0,
        "goal_tolerance": 0.1,
        "goal_speed": 0.1,
        "seed": 0,
        "disable_aux": False,
    },
    "gains": {
        "aux_kp": [1.0, 1.0, 1.0],
        "aux_kd": [1.0, 1.0, 1.0],
        "att_kp": [20.0, 20.0, 20.0],
        "att_kd": [10.0, 10.0, 10.0],
    },
    "output_dir": "out",
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class RunConfig:
    """Fully resolved configuration objects for one run."""

    params: PhysicalParams
    mode_params: ModeParams
    scenario: Scenario
    planner: PlannerConfig
    sim: SimConfig
    aux_gains: AuxGains
    att_gains: AttitudeGains
    output_dir: str

    def resolved_dict(self) -> dict:
        """The configuration re-expressed as a complete JSON document.

        Loading the returned document reproduces this configuration
        exactly; derived quantities are reported under "derived" and
        ignored by the loader.
        """
        p = self.params
        doc = {
            "physical": {
                "mass": p.m,
                "inertia": p.j.tolist(),
                "wheel_diameter": p.d,
                "axle_length": p.l,
                "restitution": p.e,
                "gravity": p.g,
            },
            "mode": {"alpha": self.mode_params.alpha},
            "scenario": scenario_to_dict(self.scenario),
            "planner": {
                "samples": self.planner.samples,
                "aux_samples": self.planner.aux_samples,
                "horizon": self.planner.horizon,
                "temperature": self.planner.temperature,
                "noise_variance": self.planner.sigma.tolist(),
                "dt": self.planner.dt,
                "w_xi": self.planner.w_xi.tolist(),
                "w_xi_dot": self.planner.w_xi_dot.tolist(),
                "w_xi_term": self.planner.w_xi_term.tolist(),
                "w_xi_dot_term": self.planner.w_xi_dot_term.tolist(),
                "w_u": self.planner.w_u.tolist(),
                "w_obs": self.planner.w_obs,
                "f_max": self.planner.f_max,
                "angle_max": self.planner.angle_max,
                "yaw_max": self.planner.yaw_max,
                "obstacle_margin": self.planner.obstacle_margin,
                "shift_warm_start": self.planner.shift_warm_start,
                "aux_roll_in_flight": self.planner.aux_roll_in_flight,
            },
            "sim": {
                "control_dt": self.sim.control_dt,
                "plant_substeps": self.sim.plant_substeps,
                "duration": self.sim.duration,
                "goal_tolerance": self.sim.goal_tolerance,
                "goal_speed": self.sim.goal_speed,
                "seed": self.sim.seed,
                "disable_aux": self.sim.disable_aux,
            },
            "gains": {
                "aux_kp": np.diag(self.aux_gains.k_xi).tolist(),
                "aux_kd": np.diag(self.aux_gains.k_xi_dot).tolist(),
                "att_kp": np.diag(self.att_gains.k_eta).tolist(),
                "att_kd": np.diag(self.att_gains.k_eta_dot).tolist(),
            },
            "output_dir": self.output_dir,
            "derived": {
                "switch_altitude": self.mode_params.switch_altitude,
                "threshold": self.mode_params.threshold,
                "inflation": self.scenario.inflation,
            },
        }
        return doc


def config_from_dict(doc: dict, base_dir: str = ".") -> RunConfig:
    """Resolve a configuration document against the defaults and build the
    runtime objects, raising ConfigError on the first invalid field."""
    merged = _merge(DEFAULTS, {k: v for k, v in doc.items() if k != "derived"})
    try:
        phys = merged["physical"]
        params = PhysicalParams(
            m=float(phys["mass"]),
            j=np.asarray(phys["inertia"], dtype=float),
            d=float(phys["wheel_diameter"]),
            l=float(phys["axle_length"]),
            e=float(phys["restitution"]),
            g=float(phys["gravity"]),
        )
        mode_params = ModeParams(
            alpha=float(merged["mode"]["alpha"]),
            switch_altitude=switch_altitude(params.d, params.l),
        )

        scen_doc = merged["scenario"]
        inflation = inflation_radius(params)
        if scen_doc is None:
            scenario = default_scenario(params)
        elif isinstance(scen_doc, str):
            path = scen_doc if os.path.isabs(scen_doc) else os.path.join(base_dir, scen_doc)
            with open(path) as fh:
                scenario = scenario_from_dict(json.load(fh), inflation)
        else:
            scenario = scenario_from_dict(scen_doc, inflation)

        pl = merged["planner"]
        f_max = pl["f_max"]
        if f_max is None:
            f_max = 2.0 * params.m * params.g
        planner = PlannerConfig(
            samples=int(pl["samples"]),
            aux_samples=int(pl["aux_samples"]),
            horizon=int(pl["horizon"]),
            temperature=float(pl["temperature"]),
            sigma=np.asarray(pl["noise_variance"], dtype=float),
            dt=float(pl["dt"]),
            w_xi=np.asarray(pl["w_xi"], dtype=float),
            w_xi_dot=np.asarray(pl["w_xi_dot"], dtype=float),
            w_xi_term=np.asarray(pl["w_xi_term"], dtype=float),
            w_xi_dot_term=np.asarray(pl["w_xi_dot_term"], dtype=float),
            w_u=np.asarray(pl["w_u"], dtype=float),
            w_obs=float(pl["w_obs"]),
            f_max=float(f_max),
            angle_max=float(pl["angle_max"]),
            yaw_max=float(pl["yaw_max"]),
            obstacle_margin=float(pl["obstacle_margin"]),
            shift_warm_start=bool(pl["shift_warm_start"]),
            aux_roll_in_flight=bool(pl["aux_roll_in_flight"]),
        )
        planner.validate()
        if np.any(planner.sigma <= 0.0):
            raise ValueError("noise variances must be positive")

        sm = merged["sim"]
        sim = SimConfig(
            control_dt=float(sm["control_dt"]),
            plant_substeps=int(sm["plant_substeps"]),
            duration=float(sm["duration"]),
            goal_tolerance=float(sm["goal_tolerance"]),
            goal_speed=float(sm["goal_speed"]),
            seed=int(sm["seed"]),
            disable_aux=bool(sm["disable_aux"]),
        )
        sim.validate()

        gains = merged["gains"]
        aux_gains = AuxGains(
            k_xi=np.diag(np.asarray(gains["aux_kp"], dtype=float)),
            k_xi_dot=np.diag(np.asarray(gains["aux_kd"], dtype=float)),
        )
        att_gains = AttitudeGains(
            k_eta=np.diag(np.asarray(gains["att_kp"], dtype=float)),
            k_eta_dot=np.diag(np.asarray(gains["att_kd"], dtype=float)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError) as err:
        raise ConfigError(f"malformed configuration: {err}") from err
    except (ValueError, OSError) as err:
        raise ConfigError(str(err)) from err

    return RunConfig(
        params=params,
        mode_params=mode_params,
        scenario=scenario,
        planner=planner,
        sim=sim,
        aux_gains=aux_gains,
        att_gains=att_gains,
        output_dir=str(merged["output_dir"]),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read configuration: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"configuration is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    return config_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))
