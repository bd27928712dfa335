"""Navigation stack for a two-wheeled ground/aerial drone."""

from .controllers import AttitudeGains, AuxGains, attitude_torque, auxiliary_input
from .dynamics import (
    ConstraintForces,
    Mode,
    ModeParams,
    PhysicalParams,
    SingularAttitudeError,
    State,
    contact_impulse,
    continuous_dynamics,
    constraint_forces,
    select_mode,
    switch_altitude,
)
from .environment import (
    CylinderObstacle,
    ReferencePoint,
    Scenario,
    collision_indicator,
    default_scenario,
    reference_at,
)
from .planner import (
    ControlInput,
    MppiDiagnostics,
    PlannerConfig,
    aux_rollout,
    build_prior,
    mppi_step,
    project_input,
    running_cost,
    terminal_cost,
    transition,
)
from .simulator import RunSummary, SimConfig, TrajectoryLog, plant_step, run

__version__ = "0.1.0"
