"""
超图数据模型 - 节点、超边、不可变超图及其构造、校验与合并
"""
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from ..exceptions import (
    ConflictingInitials,
    ConflictingTables,
    DomainViolation,
    DuplicateId,
    GraphError,
    IncompatibleSharedNode,
    NegativeWeight,
    SelfTargetWithoutAdvance,
    UnboundParameter,
    UnknownNode,
)
from ..utils.logger import logger
from .relations import RelationStrategy
from .tables import Table
from .values import check_value, format_value, values_equal

_EMPTY: Mapping = MappingProxyType({})


@dataclass(frozen=True)
class Node:
    """状态变量"""
    id: str
    label: str = ""
    description: str = ""
    unit: Optional[str] = None
    initial: Any = None
    domain_hint: Optional[Tuple[Any, ...]] = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise GraphError(f"节点标识必须是非空文本: {self.id!r}")
        if self.initial is not None:
            check_value(self.initial)
        if self.domain_hint is not None:
            object.__setattr__(self, "domain_hint", tuple(self.domain_hint))
            if self.initial is not None and not _in_domain(self.initial, self.domain_hint):
                raise DomainViolation(f"节点 '{self.id}' 的初始值 {format_value(self.initial)} 不在取值范围内")

    @property
    def has_initial(self) -> bool:
        return self.initial is not None


@dataclass(frozen=True)
class Hyperedge:
    """超边：源集合（参数名 → 节点）到目标节点的关系"""
    id: str
    sources: Mapping[str, str]
    target: str
    relation: RelationStrategy
    viability: Optional[RelationStrategy] = None
    weight: float = 1.0
    advances: bool = False

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise GraphError(f"边标识必须是非空文本: {self.id!r}")
        if not self.sources:
            raise GraphError(f"边 '{self.id}' 的源集合为空")
        object.__setattr__(self, "sources", MappingProxyType(dict(sorted(self.sources.items()))))
        object.__setattr__(self, "weight", float(self.weight))
        if not self.weight >= 0 or not math.isfinite(self.weight):
            raise NegativeWeight(f"边 '{self.id}' 的权重必须为非负有限数，实际为 {self.weight}")
        if self.target in self.sources.values() and not self.advances:
            raise SelfTargetWithoutAdvance(f"边 '{self.id}' 的目标 '{self.target}' 在源集合中，必须推进迭代帧")
        for strategy, role in ((self.relation, "关系"), (self.viability, "可行性谓词")):
            if strategy is None:
                continue
            unbound = strategy.parameters() - set(self.sources)
            if unbound:
                raise UnboundParameter(f"边 '{self.id}' 的{role}引用了未绑定参数: {sorted(unbound)}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hyperedge):
            return NotImplemented
        return (
            self.id == other.id
            and dict(self.sources) == dict(other.sources)
            and self.target == other.target
            and self.relation == other.relation
            and self.viability == other.viability
            and self.weight == other.weight
            and self.advances == other.advances
        )

    def __hash__(self) -> int:
        return hash((self.id, self.target, tuple(self.sources.items())))

    @property
    def source_nodes(self) -> Tuple[str, ...]:
        """去重后的源节点（按标识排序）"""
        return tuple(sorted(set(self.sources.values())))


def _in_domain(value: Any, domain: Iterable[Any]) -> bool:
    return any(values_equal(value, candidate) for candidate in domain)


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """不可变超图；所有修改操作返回新图"""
    nodes: Mapping[str, Node] = _EMPTY
    edges: Mapping[str, Hyperedge] = _EMPTY
    metadata: Mapping[str, Any] = _EMPTY
    tables: Mapping[str, Table] = _EMPTY

    def __post_init__(self):
        for name in ("nodes", "edges", "metadata", "tables"):
            value = getattr(self, name)
            if not isinstance(value, MappingProxyType):
                object.__setattr__(self, name, MappingProxyType(dict(value)))

    @classmethod
    def from_parts(cls, nodes: Iterable[Node] = (), edges: Iterable[Hyperedge] = (),
                   metadata: Optional[Mapping[str, Any]] = None,
                   tables: Optional[Mapping[str, Table]] = None) -> "Hypergraph":
        """不做引用检查的构造，供加载器与校验使用"""
        node_map: Dict[str, Node] = {}
        for node in nodes:
            if node.id in node_map:
                raise DuplicateId(f"节点标识重复: '{node.id}'")
            node_map[node.id] = node
        edge_map: Dict[str, Hyperedge] = {}
        for edge in edges:
            if edge.id in edge_map:
                raise DuplicateId(f"边标识重复: '{edge.id}'")
            edge_map[edge.id] = edge
        return cls(node_map, edge_map, dict(metadata or {}), dict(tables or {}))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (
            dict(self.nodes) == dict(other.nodes)
            and dict(self.edges) == dict(other.edges)
            and dict(self.metadata) == dict(other.metadata)
            and dict(self.tables) == dict(other.tables)
        )

    __hash__ = None

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def edges_into(self, node_id: str) -> List[Hyperedge]:
        return [edge for _, edge in sorted(self.edges.items()) if edge.target == node_id]

    def summary(self) -> str:
        name = self.metadata.get("name", "")
        return f"超图{f' {name}' if name else ''}: {len(self.nodes)} 个节点, {len(self.edges)} 条边"


class HypergraphBuilder:
    """可变的构造器，检查规则与 add_node / add_edge 相同"""

    def __init__(self, graph: Optional[Hypergraph] = None):
        graph = graph or Hypergraph()
        self._nodes: Dict[str, Node] = dict(graph.nodes)
        self._edges: Dict[str, Hyperedge] = dict(graph.edges)
        self._metadata: Dict[str, Any] = dict(graph.metadata)
        self._tables: Dict[str, Table] = dict(graph.tables)

    def add_node(self, node: Node) -> "HypergraphBuilder":
        if node.id in self._nodes:
            raise DuplicateId(f"节点标识重复: '{node.id}'")
        self._nodes[node.id] = node
        return self

    def add_edge(self, edge: Hyperedge) -> "HypergraphBuilder":
        if edge.id in self._edges:
            raise DuplicateId(f"边标识重复: '{edge.id}'")
        for node_id in (*edge.sources.values(), edge.target):
            if node_id not in self._nodes:
                raise UnknownNode(node_id, f"边 '{edge.id}' 引用了未知节点 '{node_id}'")
        self._edges[edge.id] = edge
        return self

    def attach_table(self, table: Table) -> "HypergraphBuilder":
        existing = self._tables.get(table.name)
        if existing is not None and existing != table:
            raise ConflictingTables(f"数据表 '{table.name}' 已存在且内容不同")
        self._tables[table.name] = table
        return self

    def set_metadata(self, key: str, value: Any) -> "HypergraphBuilder":
        self._metadata[key] = value
        return self

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def build(self) -> Hypergraph:
        return Hypergraph(self._nodes, self._edges, self._metadata, self._tables)


# ---- 图操作 ----

def add_node(graph: Hypergraph, node: Node) -> Hypergraph:
    return HypergraphBuilder(graph).add_node(node).build()


def add_edge(graph: Hypergraph, edge: Hyperedge) -> Hypergraph:
    return HypergraphBuilder(graph).add_edge(edge).build()


def attach_table(graph: Hypergraph, table: Table) -> Hypergraph:
    return HypergraphBuilder(graph).attach_table(table).build()


def set_input(graph: Hypergraph, node_id: str, value: Any) -> Hypergraph:
    """把测量值设为节点初始值"""
    node = graph.node(node_id)
    check_value(value)
    if node.domain_hint is not None and not _in_domain(value, node.domain_hint):
        raise DomainViolation(f"值 {format_value(value)} 不在节点 '{node_id}' 的取值范围内")
    nodes = dict(graph.nodes)
    nodes[node_id] = replace(node, initial=value)
    return Hypergraph(nodes, graph.edges, graph.metadata, graph.tables)


def remove_edge(graph: Hypergraph, edge_id: str) -> Hypergraph:
    if edge_id not in graph.edges:
        raise GraphError(f"未知边: '{edge_id}'")
    edges = {k: v for k, v in graph.edges.items() if k != edge_id}
    return Hypergraph(graph.nodes, edges, graph.metadata, graph.tables)


def remove_node(graph: Hypergraph, node_id: str) -> Hypergraph:
    """删除节点以及所有涉及该节点的边"""
    graph.node(node_id)
    nodes = {k: v for k, v in graph.nodes.items() if k != node_id}
    edges = {
        k: v for k, v in graph.edges.items()
        if v.target != node_id and node_id not in v.sources.values()
    }
    return Hypergraph(nodes, edges, graph.metadata, graph.tables)


def _suffixed(base: str, taken) -> str:
    counter = 2
    while f"{base}#{counter}" in taken:
        counter += 1
    return f"{base}#{counter}"


def _merge_shared_node(first: Node, second: Node) -> Node:
    if first.unit is not None and second.unit is not None and first.unit != second.unit:
        raise IncompatibleSharedNode(
            f"共享节点 '{first.id}' 单位不一致: '{first.unit}' 与 '{second.unit}'"
        )
    if first.domain_hint is not None and second.domain_hint is not None:
        same = len(first.domain_hint) == len(second.domain_hint) and all(
            _in_domain(v, second.domain_hint) for v in first.domain_hint
        )
        if not same:
            raise IncompatibleSharedNode(f"共享节点 '{first.id}' 取值范围不一致")
    if first.has_initial and second.has_initial and not values_equal(first.initial, second.initial):
        raise ConflictingInitials(
            f"共享节点 '{first.id}' 的初始值冲突: {format_value(first.initial)} 与 {format_value(second.initial)}"
        )
    return replace(
        first,
        label=first.label or second.label,
        description=first.description or second.description,
        unit=first.unit if first.unit is not None else second.unit,
        initial=first.initial if first.has_initial else second.initial,
        domain_hint=first.domain_hint if first.domain_hint is not None else second.domain_hint,
    )


def merge(g1: Hypergraph, g2: Hypergraph, shared: Mapping[str, str]) -> Hypergraph:
    """
    沿共享变量合并两张图

    Args:
        g1: 第一张图
        g2: 第二张图
        shared: g2 节点标识 → g1 节点标识

    未映射的 g2 标识与已有标识冲突时追加 "#2"、"#3"… 后缀
    """
    for g2_id, g1_id in shared.items():
        g2.node(g2_id)
        g1.node(g1_id)
    if len(set(shared.values())) != len(shared):
        raise IncompatibleSharedNode("共享映射必须是一一对应的")

    nodes: Dict[str, Node] = dict(g1.nodes)
    renamed: Dict[str, str] = {}
    for g2_id in sorted(g2.nodes):
        g2_node = g2.nodes[g2_id]
        if g2_id in shared:
            g1_id = shared[g2_id]
            renamed[g2_id] = g1_id
            nodes[g1_id] = _merge_shared_node(nodes[g1_id], replace(g2_node, id=g1_id))
            continue
        new_id = g2_id
        if new_id in nodes or new_id in g2.nodes and new_id in renamed.values():
            new_id = _suffixed(g2_id, set(nodes) | set(g2.nodes))
        renamed[g2_id] = new_id
        nodes[new_id] = replace(g2_node, id=new_id)

    edges: Dict[str, Hyperedge] = dict(g1.edges)
    for edge_id in sorted(g2.edges):
        edge = g2.edges[edge_id]
        new_id = edge_id if edge_id not in edges else _suffixed(edge_id, set(edges) | set(g2.edges))
        edges[new_id] = replace(
            edge,
            id=new_id,
            sources={param: renamed[node_id] for param, node_id in edge.sources.items()},
            target=renamed[edge.target],
        )

    tables: Dict[str, Table] = dict(g1.tables)
    for name, table in g2.tables.items():
        if name in tables and tables[name] != table:
            raise ConflictingTables(f"数据表 '{name}' 在两张图中内容不同")
        tables[name] = table

    metadata = dict(g2.metadata)
    metadata.update(g1.metadata)

    logger.debug(f"合并超图: {len(g1.nodes)} + {len(g2.nodes)} - {len(shared)} = {len(nodes)} 个节点")
    return Hypergraph(nodes, edges, metadata, tables)


# ---- 校验 ----

@dataclass(frozen=True)
class ValidationEntry:
    kind: str  # dangling-reference | unreachable-node | no-advance-cycle | unbound-parameter | unknown-builtin
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    entries: Tuple[ValidationEntry, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.entries

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def of_kind(self, kind: str) -> List[ValidationEntry]:
        return [entry for entry in self.entries if entry.kind == kind]

    def render(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(f"{e.kind}: {e.subject}: {e.message}" for e in self.entries)


def dependency_graph(graph: Hypergraph, advancing: Optional[bool] = None) -> "nx.DiGraph":
    """源节点 → 目标节点的有向图；advancing 为 None 时包含全部边"""
    digraph = nx.DiGraph()
    digraph.add_nodes_from(sorted(graph.nodes))
    for edge_id in sorted(graph.edges):
        edge = graph.edges[edge_id]
        if advancing is not None and edge.advances != advancing:
            continue
        for source in edge.source_nodes:
            digraph.add_edge(source, edge.target)
    return digraph


def validate(graph: Hypergraph, registry=None) -> ValidationReport:
    """检查悬空引用、孤立无值节点、无推进的环与未绑定参数"""
    entries: List[ValidationEntry] = []
    touched = set()

    for edge_id in sorted(graph.edges):
        edge = graph.edges[edge_id]
        for node_id in sorted({*edge.sources.values(), edge.target}):
            touched.add(node_id)
            if node_id not in graph.nodes:
                entries.append(ValidationEntry("dangling-reference", edge_id, f"引用了不存在的节点 '{node_id}'"))
        for strategy in (edge.relation, edge.viability):
            if strategy is None:
                continue
            unbound = strategy.parameters() - set(edge.sources)
            if unbound:
                entries.append(ValidationEntry("unbound-parameter", edge_id, f"未绑定参数 {sorted(unbound)}"))
            if registry is not None:
                for name in sorted(strategy.builtins_used()):
                    if name not in registry:
                        entries.append(ValidationEntry("unknown-builtin", edge_id, f"未注册的内置函数 '{name}'"))

    for node_id in sorted(graph.nodes):
        if node_id not in touched and not graph.nodes[node_id].has_initial:
            entries.append(ValidationEntry("unreachable-node", node_id, "没有任何边也没有初始值"))

    within_frame = dependency_graph(graph, advancing=False)
    for component in sorted(nx.strongly_connected_components(within_frame), key=lambda c: sorted(c)[0]):
        if len(component) > 1:
            cycle = nx.find_cycle(within_frame.subgraph(component))
            path = " -> ".join([u for u, _ in cycle] + [cycle[0][0]])
            entries.append(ValidationEntry("no-advance-cycle", sorted(component)[0], f"环路没有推进边: {path}"))

    return ValidationReport(tuple(entries))


def theoretical_edge_capacity(n: int) -> int:
    """n 个节点间可能存在的超边数上限 Σ_{i=1}^{n-1} (n-i)·C(n,i)"""
    if n < 1:
        raise GraphError(f"节点数必须不小于 1，实际为 {n}")
    return sum((n - i) * math.comb(n, i) for i in range(1, n))
