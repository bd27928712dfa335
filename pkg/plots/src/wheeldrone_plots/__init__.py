"""Figure rendering for wheeldrone trajectory logs."""

from .logdata import (
    LogFormatError,
    ScenarioData,
    TrajectoryData,
    load_scenario,
    load_trajectory,
    reference_trajectory,
    segment_by_mode,
)
from .render import (
    render_ablation,
    render_thrust,
    render_timeseries,
    render_trajectory3d,
)

__version__ = "0.1.0"
