import json

import pytest

from chg_twin.core.hypergraph import validate
from chg_twin.core.solver import solve, solve_series
from chg_twin.core.tables import Column, Table
from chg_twin.exceptions import SpecInvariantViolation
from chg_twin.microgrid.actors import (
    BuildingSpec,
    GridSpec,
    LoadSpec,
    PVSpec,
    actor_from_mapping,
    load_grid_spec,
    scenario_spec,
)
from chg_twin.microgrid.builder import build_microgrid_chg, grid_spec_of
from chg_twin.services.model_service import load_model, save_model


@pytest.fixture
def small_graph(small_grid):
    return build_microgrid_chg(small_grid)


def test_every_actor_has_general_nodes(small_grid, small_graph):
    graph, _ = small_graph
    for name in small_grid.names:
        for prefix in ("is failing", "supply", "demand", "cost", "state", "cost incurred"):
            assert f"{prefix} {name}" in graph.nodes


def test_state_vector_at_start(small_grid, small_graph, registry):
    graph, _ = small_graph
    state = solve(graph, "state vector", registry=registry).value
    assert len(state) == len(small_grid.names)
    assert sum(state) == pytest.approx(0.0, abs=1e-9)
    load = state[small_grid.index_of("Load1")]
    assert load == pytest.approx(-12.0)


def test_graph_validates(small_graph, registry):
    graph, _ = small_graph
    report = validate(graph, registry)
    assert report.ok, report.render()


def test_report_counts_match_graph(small_graph):
    graph, report = small_graph
    assert report.node_count == len(graph.nodes)
    assert report.edge_count == len(graph.edges)
    assert report.nodes["pv"] > 0 and report.edges["grid"] > 0
    assert "节点" in report.render()


def test_flow_nodes_follow_connectivity(small_grid, small_graph):
    graph, _ = small_graph
    assert "Load1 receiving from PV1" in graph.nodes
    assert "PV1 receiving from Load1" not in graph.nodes


def test_spec_travels_in_metadata(small_grid, small_graph, tmp_path):
    graph, _ = small_graph
    assert grid_spec_of(graph) == small_grid
    path = tmp_path / "grid.chg"
    save_model(graph, str(path))
    assert grid_spec_of(load_model(str(path))) == small_grid
    assert load_grid_spec(str(path)) == small_grid


def test_load_grid_spec_from_plain_json(small_grid, tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(small_grid.to_mapping()), encoding="utf-8")
    assert load_grid_spec(str(path)) == small_grid


def test_from_mapping_without_connectivity_wires_defaults(small_grid):
    mapping = small_grid.to_mapping()
    del mapping["connectivity"]
    assert GridSpec.from_mapping(mapping).connectivity == small_grid.connectivity


@pytest.mark.parametrize("actors,connectivity", [
    ((), ()),
    ((PVSpec("A"), PVSpec("A")), ((False, False), (False, False))),
    ((PVSpec("A"),), ((True,),)),
    ((LoadSpec("L", normal_load=1.0, critical_load=2.0),), ((False,),)),
    ((PVSpec("A", efficiency=1.5),), ((False,),)),
])
def test_spec_invariants(actors, connectivity):
    with pytest.raises(SpecInvariantViolation):
        GridSpec(actors=actors, connectivity=connectivity)


def test_unknown_actor_role():
    with pytest.raises(SpecInvariantViolation):
        actor_from_mapping({"role": "windmill", "name": "W"})
    with pytest.raises(SpecInvariantViolation):
        actor_from_mapping({"role": "pv", "name": "P", "colour": "blue"})


def test_scenarios():
    assert scenario_spec("islanded").island_mode
    assert not scenario_spec("connected").island_mode
    with pytest.raises(SpecInvariantViolation):
        scenario_spec("offshore")


def test_building_table_missing_columns():
    spec = GridSpec.wired((PVSpec("PV1"), BuildingSpec("B1")))
    table = Table("b", (Column("hour_index", "integer"), Column("normal_kw", "real")), ((1, 3.0),))
    with pytest.raises(SpecInvariantViolation):
        build_microgrid_chg(spec, building_tables={"B1": table})


def test_building_demand_from_table(registry):
    spec = GridSpec.wired((PVSpec("PV1"), BuildingSpec("B1", scale=2.0)))
    columns = tuple(Column(n, t) for n, t in (("hour_index", "integer"), ("normal_kw", "real"),
                                               ("lights_kw", "real"), ("equipment_kw", "real")))
    table = Table("b", columns, ((1, 10.0, 2.0, 3.0), (2, 8.0, 1.0, 1.0)))
    graph, _ = build_microgrid_chg(spec, building_tables={"B1": table})
    critical, normal, benefit = solve(graph, "demand B1", registry=registry).value
    assert normal == pytest.approx(20.0)
    assert critical == pytest.approx(2.0 * (0.5 * 2.0 + 0.67 * 3.0))
    assert benefit == 2.0


def test_solar_table_replaces_synthetic_data(registry):
    spec = GridSpec.wired((PVSpec("PV1", area=10.0, efficiency=0.2),))
    solar = Table("measured", (Column("hour_index", "integer"), Column("ghi", "real")), ((1, 1000.0),))
    graph, _ = build_microgrid_chg(spec, solar_table=solar)
    assert solve(graph, "power available PV1", registry=registry).value == pytest.approx(2.0)


def test_time_advances_by_time_step(small_grid, small_graph, registry):
    graph, _ = small_graph
    series = solve_series(graph, "time", frames=3, registry=registry)
    step = small_grid.time_step
    assert [value for _, value in series] == pytest.approx([0.0, step, 2 * step])


def test_saved_document_has_every_instantiated_node(small_graph, tmp_path):
    graph, report = small_graph
    path = tmp_path / "grid.chg"
    save_model(graph, str(path))
    document = json.loads(path.read_text(encoding="utf-8"))
    assert len(document["nodes"]) == report.node_count
    assert len(document["edges"]) == report.edge_count
