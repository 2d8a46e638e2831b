import json
import random

import pytest

from chg_twin.core.hypergraph import Hyperedge, Hypergraph, Node
from chg_twin.core.relations import expression, table_query
from chg_twin.core.solver import solve
from chg_twin.core.tables import Column, Table
from chg_twin.core.values import TableHandle
from chg_twin.exceptions import (
    DocumentParseError,
    IncludeCycle,
    IoError,
    SchemaError,
    ValidationError,
)
from chg_twin.services.model_service import ModelService, load_model, save_model

FIXTURES = ("lightbulb", "counter", "lightbulb_twin", "fibonacci", "utility",
            "competing", "weather", "cost", "coin")


def write_document(path, **fields):
    document = {"schema_version": "1", "nodes": [], "edges": [], **fields}
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def test_lightbulb_fixture_loads_as_two_nodes(load_fixture):
    graph = load_fixture("lightbulb")
    assert set(graph.nodes) == {"light1", "light2"}
    assert set(graph.edges) == {"f", "f inverse"}


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip(load_fixture, tmp_path, name):
    graph = load_fixture(name)
    first = tmp_path / "first.chg"
    second = tmp_path / "second.chg"
    save_model(graph, str(first))
    reloaded = load_model(str(first))
    assert reloaded == graph
    save_model(reloaded, str(second))
    assert first.read_bytes() == second.read_bytes()


def test_save_is_independent_of_construction_order(tmp_path):
    nodes = [Node("a", initial=1), Node("b"), Node("c")]
    edges = [
        Hyperedge("ab", {"x": "a"}, "b", expression("x + 1")),
        Hyperedge("bc", {"y": "b"}, "c", expression("y * 2")),
    ]
    forward = Hypergraph.from_parts(nodes, edges)
    backward = Hypergraph.from_parts(reversed(nodes), reversed(edges))
    save_model(forward, str(tmp_path / "f.chg"))
    save_model(backward, str(tmp_path / "b.chg"))
    assert (tmp_path / "f.chg").read_bytes() == (tmp_path / "b.chg").read_bytes()


def test_includes_merge_shared_nodes(load_fixture):
    graph = load_fixture("lightbulb_twin")
    assert {"light1", "light2", "counter1", "counter2"} == set(graph.nodes)
    assert graph.nodes["light1"].domain_hint == (True, False)


def test_include_cycle(tmp_path):
    write_document(tmp_path / "a.chg", includes=["b.chg"])
    write_document(tmp_path / "b.chg", includes=["a.chg"])
    with pytest.raises(IncludeCycle):
        load_model(str(tmp_path / "a.chg"))


def test_parse_error_carries_position(tmp_path):
    path = tmp_path / "broken.chg"
    path.write_text('{\n  "schema_version": "1",\n  "nodes": [\n}', encoding="utf-8")
    with pytest.raises(DocumentParseError) as info:
        load_model(str(path))
    assert info.value.line == 4


@pytest.mark.parametrize("fields", [
    {"schema_version": "2"},
    {"extra": True},
    {"nodes": [{"id": "a", "colour": "red"}]},
    {"nodes": [{"id": "a", "initial": None}]},
    {"nodes": [{"id": "a"}, {"id": "b"}],
     "edges": [{"id": "e", "target": "b", "sources": {"x": "a"}, "relation": {"kind": "magic", "body": "x"}}]},
])
def test_schema_errors(tmp_path, fields):
    with pytest.raises(SchemaError):
        load_model(write_document(tmp_path / "bad.chg", **fields))


def test_non_finite_numbers_are_rejected(tmp_path):
    path = tmp_path / "nan.chg"
    path.write_text('{"schema_version": "1", "nodes": [{"id": "a", "initial": NaN}]}', encoding="utf-8")
    with pytest.raises(SchemaError):
        load_model(str(path))


def test_dangling_reference_blocks_loading(tmp_path):
    path = write_document(
        tmp_path / "dangling.chg",
        nodes=[{"id": "a", "initial": 1}],
        edges=[{"id": "e", "target": "ghost", "sources": {"x": "a"},
                "relation": {"kind": "expression", "body": "x"}}],
    )
    with pytest.raises(ValidationError) as info:
        load_model(path)
    assert info.value.report.of_kind("dangling-reference")


def test_missing_file():
    with pytest.raises(IoError):
        load_model("/nonexistent/model.chg")


def test_linked_csv_table(tmp_path):
    (tmp_path / "prices.csv").write_text("hour,price\n0,0.1\n1,0.25\n", encoding="utf-8")
    path = write_document(
        tmp_path / "prices.chg",
        nodes=[
            {"id": "prices", "initial": {"table": {"name": "prices", "path": "prices.csv"}}},
            {"id": "hour", "initial": 1},
            {"id": "price"},
        ],
        edges=[{"id": "lookup price", "target": "price", "sources": {"t": "prices", "h": "hour"},
                "relation": {"kind": "table-query",
                             "body": {"table": "t", "key": "h", "key_column": "hour", "value_column": "price"}}}],
    )
    graph = load_model(path)
    assert solve(graph, "price").value == 0.25

    saved = tmp_path / "saved.chg"
    save_model(graph, str(saved))
    document = json.loads(saved.read_text(encoding="utf-8"))
    assert "tables" not in document
    assert load_model(str(saved)) == graph


def test_embedded_table_round_trip(tmp_path):
    table = Table("levels", (Column("k", "integer"), Column("v", "real")), ((1, 0.5), (2, 1.5)))
    graph = Hypergraph.from_parts(
        [Node("t", initial=TableHandle("levels")), Node("k", initial=2), Node("v")],
        [Hyperedge("q", {"t": "t", "k": "k"}, "v", table_query("t", "k", "k", "v"))],
        tables={"levels": table},
    )
    path = tmp_path / "embedded.chg"
    save_model(graph, str(path))
    reloaded = load_model(str(path))
    assert reloaded.tables["levels"] == table
    assert solve(reloaded, "v").value == 1.5


def test_merge_files_lets_weather_reach_cost(models_dir, tmp_path):
    output = tmp_path / "merged.chg"
    service = ModelService()
    graph = service.merge_files([str(models_dir / "weather.chg"), str(models_dir / "cost.chg")], str(output))
    expected = max(0.0, 5.0 - 1000.0 * (1.0 - 0.25) / 200.0) * 0.15
    assert solve(graph, "operating_cost").value == pytest.approx(expected)
    assert load_model(str(output)) == graph


def test_validate_file_reports_cycle(models_dir):
    report = ModelService().validate_file(str(models_dir / "lightbulb.chg"))
    assert [e.kind for e in report.entries] == ["no-advance-cycle"]
    assert ModelService().validate_file(str(models_dir / "fibonacci.chg")).ok


def test_empty_graph_saves_empty_arrays(tmp_path):
    path = tmp_path / "empty.chg"
    save_model(Hypergraph(), str(path))
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["nodes"] == [] and document["edges"] == []
    assert load_model(str(path)) == Hypergraph()


def _random_model(rng: random.Random) -> Hypergraph:
    nodes = []
    for i in range(rng.randint(1, 6)):
        kind = rng.randrange(4)
        if kind == 0:
            nodes.append(Node(f"v{i}", label=f"变量{i}", unit=rng.choice(["kW", "kWh", None])))
        elif kind == 1:
            nodes.append(Node(f"v{i}", initial=round(rng.uniform(-50, 50), 3)))
        elif kind == 2:
            nodes.append(Node(f"v{i}", initial=rng.randint(0, 2), domain_hint=(0, 1, 2)))
        else:
            nodes.append(Node(f"v{i}", description="开关", initial=rng.random() < 0.5))
    graph = Hypergraph.from_parts(nodes)
    ids = sorted(graph.nodes)
    edges = []
    for k in range(rng.randint(0, 6) if len(ids) > 1 else 0):
        target = rng.choice(ids)
        sources = rng.sample([i for i in ids if i != target], 1)
        viability = expression("true") if rng.random() < 0.3 else None
        edges.append(Hyperedge(f"edge {k}", {"x": sources[0]}, target, expression("x"),
                               viability=viability, weight=rng.choice([0, 0.5, 1, 2.25])))
    return Hypergraph.from_parts(nodes, edges, metadata={"name": f"random {rng.randint(0, 99)}"})


def test_random_graphs_round_trip(tmp_path):
    rng = random.Random(8)
    for index in range(50):
        graph = _random_model(rng)
        path = tmp_path / f"m{index}.chg"
        save_model(graph, str(path))
        loaded = load_model(str(path))
        assert loaded == graph
        again = tmp_path / f"m{index}b.chg"
        save_model(loaded, str(again))
        assert again.read_bytes() == path.read_bytes()


def test_equal_expressions_save_identically(tmp_path):
    def graph_with(body):
        return Hypergraph.from_parts(
            [Node("a", initial=1), Node("b")],
            [Hyperedge("ab", {"x": "a"}, "b", expression(body))],
        )

    save_model(graph_with("x+1"), str(tmp_path / "tight.chg"))
    save_model(graph_with("(x  +  1)"), str(tmp_path / "loose.chg"))
    assert (tmp_path / "tight.chg").read_bytes() == (tmp_path / "loose.chg").read_bytes()
    document = json.loads((tmp_path / "tight.chg").read_text(encoding="utf-8"))
    assert document["edges"][0]["relation"]["body"] == "(x + 1)"
