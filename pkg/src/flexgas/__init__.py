"""Desk-scale studies of coordinated electricity and natural-gas operation.

The package couples a DC optimal power flow with ramping-reserve products to
a dynamic optimal gas flow solved through a tight second-order-cone
relaxation, and negotiates the gas-fired dispatch between the two operators
with consensus ADMM.
"""

from . import cli, conic, coordinator, elec, gas, netmodel, scenarios
from .coordinator import AdmmParams, CoordinationResult, run_coordination
from .elec import ElecDecision, FrpRequirement, solve_elec
from .gas import GasDecision, GasInitialState, GasUnit, audit_tightness
from .netmodel import Fixture, load_fixture, save_fixture
from .scenarios import (RealizationScenario, ScenarioReport, compare_admm,
                        diameter_whatif, frp_sweep, run_dayahead, run_realtime)

__version__ = "0.1.0"

__all__ = [
    "AdmmParams", "CoordinationResult", "ElecDecision", "Fixture",
    "FrpRequirement", "GasDecision", "GasInitialState", "GasUnit",
    "RealizationScenario", "ScenarioReport", "audit_tightness", "cli",
    "compare_admm", "conic", "coordinator", "diameter_whatif", "elec",
    "frp_sweep", "gas", "load_fixture", "netmodel", "run_coordination",
    "run_dayahead", "run_realtime", "save_fixture", "solve_elec",
    "__version__",
]
