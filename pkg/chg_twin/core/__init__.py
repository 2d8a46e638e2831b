"""
核心模块 - 超图、表达式语言、关系策略与求解器
"""
from .builtins import BuiltinRegistry, create_core_registry
from .expression import EvalContext, evaluate, format_expression, parse_expression
from .factory import ComponentFactory
from .hypergraph import (
    Hyperedge,
    Hypergraph,
    HypergraphBuilder,
    Node,
    ValidationReport,
    add_edge,
    add_node,
    merge,
    remove_edge,
    remove_node,
    set_input,
    theoretical_edge_capacity,
    validate,
)
from .relations import builtin, expression, identity, relation_from_document, table_query
from .solver import (
    MonteCarloSummary,
    QueryResult,
    SolutionTree,
    SolverConfig,
    TraceLevel,
    explain,
    monte_carlo,
    replay,
    solve,
    solve_series,
)
from .tables import Column, Table
from .values import TableHandle, format_value

__all__ = [
    "BuiltinRegistry",
    "Column",
    "ComponentFactory",
    "EvalContext",
    "Hyperedge",
    "Hypergraph",
    "HypergraphBuilder",
    "MonteCarloSummary",
    "Node",
    "QueryResult",
    "SolutionTree",
    "SolverConfig",
    "Table",
    "TableHandle",
    "TraceLevel",
    "ValidationReport",
    "add_edge",
    "add_node",
    "builtin",
    "create_core_registry",
    "evaluate",
    "explain",
    "expression",
    "format_expression",
    "format_value",
    "identity",
    "merge",
    "monte_carlo",
    "parse_expression",
    "relation_from_document",
    "remove_edge",
    "remove_node",
    "replay",
    "set_input",
    "solve",
    "solve_series",
    "table_query",
    "theoretical_edge_capacity",
    "validate",
]
