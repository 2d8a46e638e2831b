"""
微电网领域库 - 参与者描述、物理计算、调度与场景运行
"""
from .actors import (
    BESSSpec,
    BuildingSpec,
    GeneratorSpec,
    GridSpec,
    LoadSpec,
    PVSpec,
    StartDate,
    UtilitySpec,
    load_grid_spec,
    scenario_spec,
)
from .builder import InstantiationReport, MicrogridBuilder, build_microgrid_chg, grid_spec_of
from .builtins import register_microgrid_builtins
from .dispatch import Demand, DispatchResult, Supply, dispatch
from .scenario import GridState, ScenarioResult, run_scenario

__all__ = [
    "BESSSpec",
    "BuildingSpec",
    "Demand",
    "DispatchResult",
    "GeneratorSpec",
    "GridSpec",
    "GridState",
    "InstantiationReport",
    "LoadSpec",
    "MicrogridBuilder",
    "PVSpec",
    "ScenarioResult",
    "StartDate",
    "Supply",
    "UtilitySpec",
    "build_microgrid_chg",
    "dispatch",
    "grid_spec_of",
    "load_grid_spec",
    "register_microgrid_builtins",
    "run_scenario",
    "scenario_spec",
]
