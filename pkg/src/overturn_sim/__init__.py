"""Reduced-order tractor overturning simulator for passage-slope scenarios."""

from overturn_sim.config import ConfigError, load_config
from overturn_sim.driver import DriverParams, ReferencePath, reference_path
from overturn_sim.dynamics import Controls, TractorParams, VehicleState
from overturn_sim.sim import (
    EventKind,
    SimConfig,
    SimOutput,
    TerminalStatus,
    run,
    sweep,
)
from overturn_sim.terrain import RoadGeometry, Scenario, SlopeGeometry, Terrain, build_scenario
from overturn_sim.tire import TireParams, WheelLoads

__version__ = "0.1.0"
