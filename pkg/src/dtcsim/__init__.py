"""Direct torque control simulator for induction motors.

Simulates a two-level-inverter DTC drive (hysteresis comparators plus
switching table) around a stationary-frame induction machine model, with an
optional Mamdani fuzzy optimizer that adapts the stator flux reference to
the load, and ripple metrics for comparing the two controllers.
"""

from .dtc_core import HysteresisConfig
from .frames import AlphaBetaZero, PhaseTriple, SpaceVector, clarke, inverse_clarke
from .fuzzy import OptimizerConfig, StatorFluxOptimizer
from .machine import (MotorParams, MotorState, SwitchState,
                      UnstableSimulationError, default_motor)
from .metrics import ComparisonSummary, RippleReport, compare, torque_ripple
from .sim import (PIGains, Scenario, SimRecord, StepProfile,
                  constant_load_scenario, default_scenario, run, simulate)

__version__ = "0.1.0"

__all__ = [
    "AlphaBetaZero", "ComparisonSummary", "HysteresisConfig", "MotorParams",
    "MotorState", "OptimizerConfig", "PIGains", "PhaseTriple", "RippleReport",
    "Scenario", "SimRecord", "SpaceVector", "StatorFluxOptimizer", "StepProfile",
    "SwitchState", "UnstableSimulationError", "clarke", "compare",
    "constant_load_scenario", "default_motor", "default_scenario",
    "inverse_clarke", "run", "simulate", "torque_ripple",
]
