"""
模型文档服务 - 模型文件的加载、规范化保存与包含合并
"""
import json
import os
from typing import Any, Dict, List, Mapping, Optional, Sequence

from ..config import EngineConfig
from ..core.hypergraph import (
    Hyperedge,
    Hypergraph,
    Node,
    ValidationReport,
    merge,
    validate,
)
from ..core.relations import RelationStrategyManager
from ..core.tables import COLUMN_TYPES, Column, Table
from ..core.values import TableHandle, check_value
from ..exceptions import (
    ChgError,
    DocumentParseError,
    IncludeCycle,
    IoError,
    SchemaError,
    ValidationError,
)
from ..utils.decorators import operation_handler
from ..utils.logger import logger
from .table_service import load_csv_table

DOCUMENT_FIELDS = {"schema_version", "metadata", "nodes", "edges", "includes", "tables"}
NODE_FIELDS = {"id", "label", "unit", "description", "initial", "domain"}
EDGE_FIELDS = {"id", "target", "sources", "relation", "viability", "weight", "advances"}
LOAD_BLOCKING = ("dangling-reference", "unbound-parameter")


def _reject_constant(name: str):
    raise SchemaError(f"模型文档不允许非有限数 {name}")


# ---- 值编码 ----

def encode_value(value: Any, base_dir: str) -> Any:
    if isinstance(value, TableHandle):
        record: Dict[str, Any] = {"name": value.name}
        if value.path is not None:
            record["path"] = os.path.relpath(value.path, base_dir).replace(os.sep, "/")
        return {"table": record}
    if isinstance(value, tuple):
        return [encode_value(item, base_dir) for item in value]
    return value


def decode_value(raw: Any, base_dir: str, where: str) -> Any:
    if isinstance(raw, list):
        return tuple(decode_value(item, base_dir, where) for item in raw)
    if isinstance(raw, dict):
        record = raw.get("table")
        if set(raw) != {"table"} or not isinstance(record, dict) or not isinstance(record.get("name"), str):
            raise SchemaError(f"{where}: 对象值只能是数据表句柄 {{\"table\": {{\"name\", \"path\"}}}}")
        if set(record) - {"name", "path"}:
            raise SchemaError(f"{where}: 数据表句柄含未知字段 {sorted(set(record) - {'name', 'path'})}")
        path = record.get("path")
        if path is not None:
            if not isinstance(path, str):
                raise SchemaError(f"{where}: 数据表路径必须是文本")
            path = os.path.normpath(os.path.join(base_dir, path))
        return TableHandle(record["name"], path)
    if raw is None:
        raise SchemaError(f"{where}: 值不能为 null")
    try:
        return check_value(raw)
    except ChgError as e:
        raise SchemaError(f"{where}: {e}") from e


# ---- 文档 → 超图 ----

def _require_mapping(raw: Any, allowed, where: str) -> Mapping[str, Any]:
    if not isinstance(raw, dict):
        raise SchemaError(f"{where} 必须是对象")
    unknown = set(raw) - set(allowed)
    if unknown:
        raise SchemaError(f"{where} 含未知字段: {sorted(unknown)}")
    return raw


def _optional_text(record: Mapping[str, Any], key: str, where: str) -> Optional[str]:
    value = record.get(key)
    if value is not None and not isinstance(value, str):
        raise SchemaError(f"{where}.{key} 必须是文本")
    return value


def _node_from_record(raw: Any, base_dir: str, index: int) -> Node:
    record = _require_mapping(raw, NODE_FIELDS, f"nodes[{index}]")
    node_id = record.get("id")
    if not isinstance(node_id, str) or not node_id:
        raise SchemaError(f"nodes[{index}].id 必须是非空文本")
    where = f"节点 '{node_id}'"
    initial = decode_value(record["initial"], base_dir, where) if "initial" in record else None
    domain = None
    if "domain" in record:
        if not isinstance(record["domain"], list):
            raise SchemaError(f"{where} 的 domain 必须是数组")
        domain = decode_value(record["domain"], base_dir, where)
    return Node(
        id=node_id,
        label=_optional_text(record, "label", where) or "",
        description=_optional_text(record, "description", where) or "",
        unit=_optional_text(record, "unit", where),
        initial=initial,
        domain_hint=domain,
    )


def _edge_from_record(raw: Any, index: int, manager: RelationStrategyManager) -> Hyperedge:
    record = _require_mapping(raw, EDGE_FIELDS, f"edges[{index}]")
    for key in ("id", "target", "sources", "relation"):
        if key not in record:
            raise SchemaError(f"edges[{index}] 缺少字段 {key}")
    edge_id = record["id"]
    where = f"边 '{edge_id}'"
    if not isinstance(edge_id, str) or not isinstance(record["target"], str):
        raise SchemaError(f"edges[{index}] 的 id 与 target 必须是文本")
    sources = record["sources"]
    if not isinstance(sources, dict) or not all(isinstance(v, str) for v in sources.values()):
        raise SchemaError(f"{where} 的 sources 必须是 参数名 → 节点标识 的对象")
    weight = record.get("weight", 1.0)
    if isinstance(weight, bool) or not isinstance(weight, (int, float)):
        raise SchemaError(f"{where} 的 weight 必须是数值")
    advances = record.get("advances", False)
    if not isinstance(advances, bool):
        raise SchemaError(f"{where} 的 advances 必须是布尔值")
    viability = record.get("viability")
    return Hyperedge(
        id=edge_id,
        sources=sources,
        target=record["target"],
        relation=manager.from_document(record["relation"], f"{where} 的 relation"),
        viability=manager.from_document(viability, f"{where} 的 viability") if viability is not None else None,
        weight=float(weight),
        advances=advances,
    )


def _table_from_record(name: str, raw: Any) -> Table:
    record = _require_mapping(raw, {"columns", "rows"}, f"tables.{name}")
    columns = []
    for column in record.get("columns", []):
        column = _require_mapping(column, {"name", "type"}, f"tables.{name}.columns")
        if column.get("type") not in COLUMN_TYPES or not isinstance(column.get("name"), str):
            raise SchemaError(f"数据表 '{name}' 的列定义无效: {column}")
        columns.append(Column(column["name"], column["type"]))
    rows = []
    for row in record.get("rows", []):
        if not isinstance(row, list) or len(row) != len(columns):
            raise SchemaError(f"数据表 '{name}' 的行与列数不一致: {row!r}")
        cells = []
        for column, cell in zip(columns, row):
            if column.type == "real" and isinstance(cell, int) and not isinstance(cell, bool):
                cell = float(cell)
            cells.append(cell)
        rows.append(tuple(cells))
    return Table(name, tuple(columns), tuple(rows))


def _read_document(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise IoError(f"无法读取模型文件 {path}: {e}") from e
    try:
        document = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise DocumentParseError(e.msg, e.lineno, e.colno) from e
    if not isinstance(document, dict):
        raise SchemaError("模型文档顶层必须是对象")
    return document


def graph_from_document(document: Mapping[str, Any], base_dir: str = ".",
                        schema_version: str = "1") -> Hypergraph:
    """把已解析的文档转换为超图（不处理 includes，不做引用校验）"""
    _require_mapping(document, DOCUMENT_FIELDS, "模型文档")
    version = document.get("schema_version")
    if version != schema_version:
        raise SchemaError(f"不支持的 schema_version: {version!r}，期望 {schema_version!r}")
    metadata = document.get("metadata", {})
    if not isinstance(metadata, dict):
        raise SchemaError("metadata 必须是对象")
    for key in ("nodes", "edges", "includes"):
        if not isinstance(document.get(key, []), list):
            raise SchemaError(f"{key} 必须是数组")

    manager = RelationStrategyManager()
    nodes = [_node_from_record(raw, base_dir, i) for i, raw in enumerate(document.get("nodes", []))]
    edges = [_edge_from_record(raw, i, manager) for i, raw in enumerate(document.get("edges", []))]

    raw_tables = document.get("tables", {})
    if not isinstance(raw_tables, dict):
        raise SchemaError("tables 必须是对象")
    tables = {name: _table_from_record(name, raw) for name, raw in raw_tables.items()}

    for node in nodes:
        handle = node.initial
        if not isinstance(handle, TableHandle):
            continue
        if handle.path is not None:
            tables[handle.name] = load_csv_table(handle.path, handle.name)
        elif handle.name not in tables:
            raise SchemaError(f"节点 '{node.id}' 引用的数据表 '{handle.name}' 既无路径也未内嵌")

    return Hypergraph.from_parts(nodes, edges, metadata, tables)


def _blocking(report: ValidationReport) -> ValidationReport:
    return ValidationReport(tuple(e for e in report.entries if e.kind in LOAD_BLOCKING))


def _load(path: str, stack: List[str], schema_version: str) -> Hypergraph:
    absolute = os.path.abspath(path)
    if absolute in stack:
        chain = " -> ".join(stack[stack.index(absolute):] + [absolute])
        raise IncludeCycle(f"模型文件循环包含: {chain}")
    stack.append(absolute)
    try:
        document = _read_document(absolute)
        base_dir = os.path.dirname(absolute)
        graph = graph_from_document(document, base_dir, schema_version)
        for include in document.get("includes", []):
            if not isinstance(include, str):
                raise SchemaError(f"includes 只能包含路径文本: {include!r}")
            included = _load(os.path.join(base_dir, include), stack, schema_version)
            shared = {node_id: node_id for node_id in included.nodes if node_id in graph.nodes}
            logger.debug(f"合并包含文件 {include}，共享 {len(shared)} 个节点")
            graph = merge(graph, included, shared)
    finally:
        stack.pop()

    blocking = _blocking(validate(graph))
    if blocking:
        raise ValidationError(blocking)
    return graph


def load_model(path: str, config: Optional[EngineConfig] = None) -> Hypergraph:
    """加载模型文件，深度优先解析 includes 并检测循环"""
    config = config or EngineConfig.create_default()
    return _load(path, [], config.model_io.SCHEMA_VERSION)


# ---- 超图 → 文档 ----

def document_from_graph(graph: Hypergraph, base_dir: str = ".", schema_version: str = "1") -> Dict[str, Any]:
    """规范形式：节点与边按标识排序"""
    nodes = []
    linked_tables = set()
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        record: Dict[str, Any] = {"id": node.id}
        if node.label:
            record["label"] = node.label
        if node.description:
            record["description"] = node.description
        if node.unit is not None:
            record["unit"] = node.unit
        if node.has_initial:
            record["initial"] = encode_value(node.initial, base_dir)
            if isinstance(node.initial, TableHandle) and node.initial.path is not None:
                linked_tables.add(node.initial.name)
        if node.domain_hint is not None:
            record["domain"] = encode_value(node.domain_hint, base_dir)
        nodes.append(record)

    edges = []
    for edge_id in sorted(graph.edges):
        edge = graph.edges[edge_id]
        record = {
            "id": edge.id,
            "target": edge.target,
            "sources": dict(edge.sources),
            "relation": edge.relation.to_document(),
            "weight": edge.weight,
            "advances": edge.advances,
        }
        if edge.viability is not None:
            record["viability"] = edge.viability.to_document()
        edges.append(record)

    document: Dict[str, Any] = {
        "schema_version": schema_version,
        "metadata": dict(graph.metadata),
        "nodes": nodes,
        "edges": edges,
        "includes": [],
    }
    embedded = {
        name: {
            "columns": [{"name": c.name, "type": c.type} for c in table.columns],
            "rows": [[encode_value(v, base_dir) for v in row] for row in table.rows],
        }
        for name, table in sorted(graph.tables.items())
        if name not in linked_tables
    }
    if embedded:
        document["tables"] = embedded
    return document


def render_document(document: Mapping[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_model(graph: Hypergraph, path: str, config: Optional[EngineConfig] = None) -> None:
    """以规范形式写出模型，相同的图得到逐字节相同的文件"""
    config = config or EngineConfig.create_default()
    base_dir = os.path.dirname(os.path.abspath(path))
    text = render_document(document_from_graph(graph, base_dir, config.model_io.SCHEMA_VERSION))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as e:
        raise IoError(f"无法写入模型文件 {path}: {e}") from e


class ModelService:
    """模型服务 - 命令行使用的模型读写入口"""

    def __init__(self, config: Optional[EngineConfig] = None):
        self.config = config or EngineConfig.create_default()

    @operation_handler("加载模型")
    def load(self, path: str) -> Hypergraph:
        return load_model(path, self.config)

    @operation_handler("保存模型")
    def save(self, graph: Hypergraph, path: str) -> None:
        save_model(graph, path, self.config)

    @operation_handler("合并模型")
    def merge_files(self, paths: Sequence[str], output: str) -> Hypergraph:
        """按标识相等依次合并多个模型文件并写出规范文档"""
        graph = self.load(paths[0])
        for path in paths[1:]:
            other = self.load(path)
            shared = {node_id: node_id for node_id in other.nodes if node_id in graph.nodes}
            graph = merge(graph, other, shared)
        self.save(graph, output)
        return graph

    def validate_file(self, path: str, registry=None) -> ValidationReport:
        return validate(self.load(path), registry)
