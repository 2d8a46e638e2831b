import json

import pytest

from chg_twin.config import EngineConfig, load_schema
from chg_twin.core.solver import SolverConfig, TraceLevel
from chg_twin.exceptions import ConfigurationError


def test_defaults():
    config = EngineConfig.create_default()
    assert config.solver.MAX_FIRINGS == 1_000_000
    assert config.solver.MAX_ITERATIONS == 10_000
    assert config.model_io.SCHEMA_VERSION == "1"
    assert config.microgrid.TRICKLE_RATE_FRACTION == 0.1


def test_schema_covers_every_setting():
    schema = load_schema()
    mapping = EngineConfig.create_default().to_mapping()
    for section, values in mapping.items():
        assert set(values) == set(schema[section]["items"])


def test_from_mapping_overrides_defaults():
    config = EngineConfig.from_mapping({"Solver": {"Max_Firings": 500, "Trace_Level": "full"}})
    assert config.solver.MAX_FIRINGS == 500
    assert config.solver.TRACE_LEVEL == "full"
    assert config.solver.MAX_ITERATIONS == 10_000


@pytest.mark.parametrize("mapping", [
    {"Nope": {}},
    {"Solver": {"Unknown_Key": 1}},
    {"Solver": {"Max_Firings": "many"}},
    {"Solver": {"Max_Firings": True}},
    {"Solver": {"Trace_Level": "loud"}},
])
def test_from_mapping_rejects_bad_input(mapping):
    with pytest.raises(ConfigurationError):
        EngineConfig.from_mapping(mapping)


def test_from_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"Microgrid": {"Tolerance": 1e-6}}), encoding="utf-8")
    assert EngineConfig.from_file(str(path)).microgrid.TOLERANCE == 1e-6

    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        EngineConfig.from_file(str(path))


def test_environment_override():
    config = EngineConfig.create_default().apply_environment({"CHG_MAX_FIRINGS": "42"})
    assert config.solver.MAX_FIRINGS == 42
    assert EngineConfig.create_default().apply_environment({}).solver.MAX_FIRINGS == 1_000_000
    with pytest.raises(ConfigurationError):
        EngineConfig.create_default().apply_environment({"CHG_MAX_FIRINGS": "0"})
    with pytest.raises(ConfigurationError):
        EngineConfig.create_default().apply_environment({"CHG_MAX_FIRINGS": "ten"})


def test_solver_config_from_settings():
    config = EngineConfig.from_mapping({"Solver": {"Default_Seed": 7}})
    solver_config = SolverConfig.from_settings(config.solver, trace_level="values")
    assert solver_config.rng_seed == 7
    assert solver_config.trace_level is TraceLevel.VALUES
    with pytest.raises(ConfigurationError):
        SolverConfig(max_firings=0)
