"""
测试公共夹具
"""
from pathlib import Path

import pytest

from chg_twin.config import EngineConfig
from chg_twin.core.factory import ComponentFactory
from chg_twin.microgrid.actors import (
    BESSSpec,
    GeneratorSpec,
    GridSpec,
    LoadSpec,
    PVSpec,
    UtilitySpec,
)
from chg_twin.services.model_service import load_model

MODELS_DIR = Path(__file__).resolve().parent.parent / "chg_twin" / "models"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS_DIR


@pytest.fixture(scope="session")
def load_fixture():
    def _load(name: str):
        return load_model(str(MODELS_DIR / f"{name}.chg"))
    return _load


@pytest.fixture(scope="session")
def registry():
    return ComponentFactory.create_registry()


@pytest.fixture
def engine_config() -> EngineConfig:
    return EngineConfig.create_default()


@pytest.fixture
def small_grid_actors():
    """每类电源一个加一个固定负荷"""
    return (
        PVSpec("PV1", area=50.0, efficiency=0.2),
        BESSSpec("BESS1", charge_capacity=20.0, starting_level=10.0, max_output=5.0, max_charge_rate=5.0),
        GeneratorSpec("Gen1", fuel_capacity=50.0, starting_fuel=30.0, max_output=8.0, max_consumption=3.0),
        LoadSpec("Load1", normal_load=12.0, critical_load=5.0),
        UtilitySpec("Utility", cost=0.15, max_import=100.0),
    )


@pytest.fixture
def small_grid(small_grid_actors) -> GridSpec:
    return GridSpec.wired(small_grid_actors)
