import itertools
import random

import numpy as np
import pytest

from chg_twin.core.hypergraph import Hyperedge, Hypergraph, Node, add_edge, remove_edge
from chg_twin.core.relations import expression
from chg_twin.core.solver import (
    HyperpathSolver,
    SolverConfig,
    TraceLevel,
    explain,
    monte_carlo,
    replay,
    run_frames,
    solve,
    solve_series,
)
from chg_twin.exceptions import (
    AllRunsFailed,
    FiringLimit,
    IterationLimit,
    NoPath,
    ReplayMismatch,
    SolverError,
    UnknownNode,
)
from chg_twin.services.model_service import document_from_graph, render_document


def fibonacci_oracle(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


class TestLightbulb:
    def test_counter_mapping(self, load_fixture):
        graph = load_fixture("counter")
        assert solve(graph, "counter1", {"counter2": 1}).value == 0
        assert solve(graph, "counter1", {"counter2": 0}).value == 1

    def test_bulbs_are_mutually_exclusive(self, load_fixture):
        graph = load_fixture("lightbulb")
        for light2 in (True, False):
            assert solve(graph, "light1", {"light2": light2}).value is (not light2)

    def test_measured_target_is_returned_at_zero_cost(self, load_fixture):
        result = solve(load_fixture("lightbulb"), "light2", {"light2": True})
        assert result.value is True
        assert result.total_cost == 0.0
        assert result.tree.firings == ()
        assert result.tree.leaves[0].measured

    def test_explain_is_two_lines(self, load_fixture):
        result = solve(load_fixture("lightbulb"), "light1", {"light2": True})
        lines = explain(result).splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("light1 = false <- f(x = true)")
        assert lines[1] == "  light2 = true (measured, cost 0)"

    def test_twin_composes_both_models(self, load_fixture):
        graph = load_fixture("lightbulb_twin")
        assert solve(graph, "counter1", {"light2": True}).value == 0
        assert solve(graph, "light2", {"counter2": 1}).value is True


class TestConditionalViability:
    def test_disconnected_utility_delivers_nothing(self, load_fixture):
        assert solve(load_fixture("utility"), "received_power", {"connected": False}).value == 0

    def test_connected_utility_has_no_path(self, load_fixture):
        with pytest.raises(NoPath):
            solve(load_fixture("utility"), "received_power", {"connected": True})

    def test_rejections_are_traced(self, load_fixture):
        solver = HyperpathSolver(load_fixture("utility"), {"connected": True},
                                 SolverConfig(trace_level=TraceLevel.FULL))
        with pytest.raises(NoPath):
            solver.solve("received_power")
        assert [r.status for r in solver.trace] == ["not-viable"]


class TestCompetingPaths:
    def test_cheapest_derivation_wins(self, load_fixture):
        result = solve(load_fixture("competing"), "y")
        assert result.value == 6
        assert result.total_cost == 1.0
        assert result.tree.firings[-1].edge_id == "coarse"

    def test_next_cheapest_after_removal(self, load_fixture):
        graph = remove_edge(load_fixture("competing"), "coarse")
        result = solve(graph, "y")
        assert result.value == 40
        assert result.total_cost == 2.0

    def test_equal_costs_break_ties_by_edge_id(self):
        graph = Hypergraph.from_parts(
            [Node("x", initial=1), Node("y")],
            [
                Hyperedge("b-edge", {"x": "x"}, "y", expression("x + 20")),
                Hyperedge("a-edge", {"x": "x"}, "y", expression("x + 10")),
            ],
        )
        assert solve(graph, "y").value == 11

    def test_shared_sources_count_once(self):
        graph = Hypergraph.from_parts(
            [Node("x", initial=1), Node("m"), Node("y")],
            [
                Hyperedge("to m", {"x": "x"}, "m", expression("x * 2"), weight=3.0),
                Hyperedge("to y", {"a": "m", "b": "m"}, "y", expression("a + b"), weight=1.0),
            ],
        )
        result = solve(graph, "y")
        assert result.value == 4
        assert result.total_cost == 4.0


def _random_dag(rng: random.Random, max_nodes: int = 6, max_edges: int = 10, uncertain: bool = False) -> Hypergraph:
    """n0 为初值节点；边只从编号小的节点指向编号大的节点"""
    size = rng.randint(2, max_nodes)
    nodes = [Node("n0", initial=1)]
    nodes += [Node(f"n{i}", initial=2) if rng.random() < 0.15 else Node(f"n{i}") for i in range(1, size)]
    edges = [_random_edge(rng, size, f"e{k}", uncertain) for k in range(rng.randint(1, max_edges))]
    return Hypergraph.from_parts(nodes, edges)


def _random_edge(rng: random.Random, size: int, edge_id: str, uncertain: bool = False) -> Hyperedge:
    target = rng.randint(1, size - 1)
    sources = rng.sample(range(target), min(target, rng.randint(1, 2)))
    params = {f"p{s}": f"n{s}" for s in sources}
    body = " + ".join(params) + f" + {len(edge_id)}"
    if uncertain and rng.random() < 0.5:
        body += " + randint(0, 9)"
    return Hyperedge(edge_id, params, f"n{target}", expression(body), weight=float(rng.randint(0, 3)))


def _derivation_trees(graph: Hypergraph, node_id: str, memo: dict) -> list:
    """列举以初值节点为叶子的全部推导树：叶子为 (节点,)，内部为 (边, 权重, 子树...)"""
    if node_id not in memo:
        trees = [(node_id,)] if graph.nodes[node_id].has_initial else []
        for edge in graph.edges_into(node_id):
            options = [_derivation_trees(graph, source, memo) for source in edge.source_nodes]
            trees.extend((edge.id, edge.weight, children) for children in itertools.product(*options))
        memo[node_id] = trees
    return memo[node_id]


def _tree_cost(tree) -> float:
    if len(tree) == 1:
        return 0.0
    return tree[1] + sum(_tree_cost(child) for child in tree[2])


def test_minimum_cost_against_tree_enumeration():
    rng = random.Random(11)
    for _ in range(200):
        graph = _random_dag(rng)
        memo = {}
        for node_id in sorted(graph.nodes):
            trees = _derivation_trees(graph, node_id, memo)
            if not trees:
                with pytest.raises(NoPath):
                    solve(graph, node_id)
                continue
            result = solve(graph, node_id)
            assert result.total_cost == min(_tree_cost(tree) for tree in trees)
            assert sum(firing.weight for firing in result.tree.firings) == result.total_cost


def test_shared_subderivation_counts_once_per_use():
    graph = Hypergraph.from_parts(
        [Node("a", initial=1), Node("b"), Node("c"), Node("d"), Node("e")],
        [
            Hyperedge("ab", {"x": "a"}, "b", expression("x + 1"), weight=3.0),
            Hyperedge("bc", {"x": "b"}, "c", expression("x"), weight=0.0),
            Hyperedge("bd", {"x": "b"}, "d", expression("x"), weight=0.0),
            Hyperedge("cde", {"c": "c", "d": "d"}, "e", expression("c + d"), weight=0.0),
        ],
    )
    result = solve(graph, "e")
    assert result.value == 4
    assert result.total_cost == 6.0
    assert sum(firing.weight for firing in result.tree.firings) == 6.0
    assert [firing.edge_id for firing in result.tree.firings].count("ab") == 2
    assert replay(result.tree, graph) == 4


def test_replay_reproduces_value():
    rng = random.Random(5)
    for _ in range(10):
        graph = _random_dag(rng, uncertain=True)
        for node_id in sorted(graph.nodes):
            try:
                result = solve(graph, node_id, config=SolverConfig(rng_seed=3))
            except NoPath:
                continue
            assert replay(result.tree, graph, rng_seed=3) == result.value


def test_extension_has_no_side_effects(tmp_path):
    rng = random.Random(23)
    global_state = np.random.get_state()[1].copy()
    solved = 0
    for _ in range(100):
        graph = _random_dag(rng, uncertain=True)
        target = rng.choice(sorted(graph.nodes))
        config = SolverConfig(rng_seed=rng.randint(0, 2 ** 31))
        snapshot = render_document(document_from_graph(graph, str(tmp_path)))
        try:
            result = solve(graph, target, config=config)
        except NoPath:
            continue
        solved += 1

        extended = graph
        for j in range(rng.randint(1, 3)):
            extended = add_edge(extended, _random_edge(rng, len(graph.nodes), f"extra{j}", uncertain=True))

        assert render_document(document_from_graph(graph, str(tmp_path))) == snapshot
        assert all(extended.edges[edge_id] == edge for edge_id, edge in graph.edges.items())
        assert replay(result.tree, extended, rng_seed=config.rng_seed) == result.value
        assert solve(extended, target, config=config).total_cost <= result.total_cost
    assert solved >= 50
    assert np.array_equal(np.random.get_state()[1], global_state)


def test_replay_detects_tampering(load_fixture):
    graph = load_fixture("counter")
    result = solve(graph, "counter1", {"counter2": 1})
    tampered = Hypergraph.from_parts(
        graph.nodes.values(),
        [Hyperedge("g", {"c": "counter2"}, "counter1", expression("c"))],
    )
    with pytest.raises(ReplayMismatch):
        replay(result.tree, tampered)


def test_adding_an_edge_never_raises_cost(load_fixture):
    graph = load_fixture("competing")
    before = solve(remove_edge(graph, "coarse"), "y").total_cost
    assert solve(graph, "y").total_cost <= before


class TestFibonacci:
    @pytest.mark.parametrize("n", range(1, 21))
    def test_exit_edge_matches_oracle(self, load_fixture, n):
        assert solve(load_fixture("fibonacci"), "S", {"n": n}).value == fibonacci_oracle(n)

    def test_series(self, load_fixture):
        series = solve_series(load_fixture("fibonacci"), "fib", frames=6)
        assert series == [(0, 1), (1, 1), (2, 2), (3, 3), (4, 5), (5, 8)]

    def test_tree_unrolls_the_cycle(self, load_fixture):
        result = solve(load_fixture("fibonacci"), "S", {"n": 5})
        advancing = [f for f in result.tree.firings if f.edge_id == "advance pair"]
        assert len(advancing) == 5
        assert result.tree.root == ("S", 5)
        assert "S[5] = 5 <- exit[5]" in explain(result)

    def test_iteration_limit(self, load_fixture):
        with pytest.raises(IterationLimit):
            solve(load_fixture("fibonacci"), "S", {"n": 30}, SolverConfig(max_iterations=10))

    def test_firing_limit(self, load_fixture):
        with pytest.raises(FiringLimit):
            solve(load_fixture("fibonacci"), "S", {"n": 30}, SolverConfig(max_firings=5))


def test_series_extension_is_monotone(load_fixture):
    graph = load_fixture("fibonacci")
    short = solve_series(graph, "fib", frames=4)
    long = solve_series(graph, "fib", frames=9)
    assert long[:4] == short


def test_static_nodes_are_readable_from_every_frame(load_fixture):
    run = run_frames(load_fixture("fibonacci"), 3)
    assert run.value("n", 2) == 10
    assert run.series("pair")[2] == (2, (1, 2))


def test_unknown_target_and_inputs(load_fixture):
    graph = load_fixture("counter")
    with pytest.raises(UnknownNode):
        solve(graph, "ghost")
    with pytest.raises(UnknownNode):
        solve(graph, "counter1", {"ghost": 1})
    with pytest.raises(SolverError):
        run_frames(graph, 0)


class TestMonteCarlo:
    def test_coin_mean(self, load_fixture):
        summary = monte_carlo(load_fixture("coin"), "heads", runs=2000, config=SolverConfig(rng_seed=3))
        assert summary.mean == pytest.approx(0.5, abs=0.05)
        assert summary.failures == 0
        assert summary.min == 0.0 and summary.max == 1.0

    def test_deterministic_for_seed(self, load_fixture):
        graph = load_fixture("coin")
        first = monte_carlo(graph, "heads", runs=50, config=SolverConfig(rng_seed=9))
        second = monte_carlo(graph, "heads", runs=50, config=SolverConfig(rng_seed=9))
        assert first.samples == second.samples

    def test_all_runs_failing(self, load_fixture):
        with pytest.raises(AllRunsFailed):
            monte_carlo(load_fixture("utility"), "received_power", {"connected": True}, runs=3)


def test_single_frame_of_static_graph_matches_solve(load_fixture):
    graph = load_fixture("competing")
    assert solve_series(graph, "y", frames=1) == [(0, solve(graph, "y").value)]
