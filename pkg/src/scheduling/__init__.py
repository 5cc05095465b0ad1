# Scheduling Module
from .library import HCTrajectory, load_hc_library, parse_hc_lines
from .scheduler import (
    EpisodeSchedule, SchedulerState, ema, ema_update, select_intention, tail_returns, temperature_decay,
)

__all__ = [
    "HCTrajectory", "load_hc_library", "parse_hc_lines", "EpisodeSchedule", "SchedulerState", "ema",
    "ema_update", "select_intention", "tail_returns", "temperature_decay",
]
