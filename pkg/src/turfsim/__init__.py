"""Event-driven simulation of organized criminal groups competing for city areas."""
from .belief import StationaryProfile, belief_unoccupied, belief_value, solve_stationary
from .config import (
    TEN_AREA_REVENUES,
    AreaSpec,
    BeliefRecord,
    CityConfig,
    ConfigError,
    EventKind,
    EventRecord,
    InitialBeliefs,
    StreakMode,
    load_config,
    validate_config,
)
from .engine import SimulationRun, replay_check, run, simulate
from .events import EventLog
from .metrics import DayEvent, MetricsReport, compute_metrics, empirical_streaks, ocg_count, read_day_events
from .regime import Regime, RegimeThresholds, check_corollaries, check_propositions, classify, thresholds
from .strategy import expected_return, rank_areas
from .sweep import SweepPlan, SweepResult, run_sweep

__version__ = "0.1.0"

__all__ = [
    "AreaSpec",
    "BeliefRecord",
    "CityConfig",
    "ConfigError",
    "DayEvent",
    "EventKind",
    "EventLog",
    "EventRecord",
    "InitialBeliefs",
    "MetricsReport",
    "TEN_AREA_REVENUES",
    "Regime",
    "RegimeThresholds",
    "SimulationRun",
    "StationaryProfile",
    "StreakMode",
    "SweepPlan",
    "SweepResult",
    "belief_unoccupied",
    "belief_value",
    "check_corollaries",
    "check_propositions",
    "classify",
    "compute_metrics",
    "empirical_streaks",
    "expected_return",
    "load_config",
    "ocg_count",
    "rank_areas",
    "read_day_events",
    "replay_check",
    "run",
    "run_sweep",
    "simulate",
    "solve_stationary",
    "thresholds",
    "validate_config",
]
