"""
关系策略模块 - 使用策略模式实现不同种类的边关系

四种关系：expression（表达式）、builtin（注册表函数）、
table-query（数据表查询）、identity（恒等映射）。
可行性谓词复用同样的策略，只是要求结果为布尔值。
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, FrozenSet, List, Mapping, Optional, Tuple, Type

from ..exceptions import ChgError, SchemaError, TypeMismatch, UnboundParameter
from ..utils.logger import logger
from .expression import (
    CallContext,
    EvalContext,
    Expr,
    called_builtins,
    evaluate,
    format_expression,
    parameter_names,
    parse_expression,
)
from .values import TableHandle

PARAMETER_PREFIX = "$"


class RelationStrategy(ABC):
    """边关系策略抽象基类"""

    kind: ClassVar[str] = ""

    @classmethod
    def can_handle(cls, kind: str) -> bool:
        return kind == cls.kind

    @classmethod
    @abstractmethod
    def from_body(cls, body: Any) -> "RelationStrategy":
        """从模型文档的 body 字段构造"""

    @abstractmethod
    def parameters(self) -> FrozenSet[str]:
        """关系引用的参数名"""

    @abstractmethod
    def evaluate(self, ctx: EvalContext, call: CallContext) -> Any:
        """在绑定上求值，得到唯一的值或抛出求值异常"""

    @abstractmethod
    def body(self) -> Any:
        """模型文档中的 body 字段"""

    def builtins_used(self) -> FrozenSet[str]:
        return frozenset()

    def to_document(self) -> Dict[str, Any]:
        return {"kind": self.kind, "body": self.body()}

    @property
    def strategy_name(self) -> str:
        return self.kind

    def describe(self) -> str:
        return f"{self.kind}: {self.body()}"


@dataclass(frozen=True)
class ExpressionRelation(RelationStrategy):
    """表达式关系，语法树决定相等性，写出时使用规范形式"""
    tree: Expr

    kind: ClassVar[str] = "expression"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ExpressionRelation) and self.tree == other.tree

    def __hash__(self) -> int:
        return hash(format_expression(self.tree))

    @classmethod
    def from_text(cls, text: str) -> "ExpressionRelation":
        return cls(parse_expression(text))

    @classmethod
    def from_body(cls, body: Any) -> "ExpressionRelation":
        if not isinstance(body, str):
            raise SchemaError(f"expression 关系的 body 必须是文本，实际为 {body!r}")
        return cls.from_text(body)

    def parameters(self) -> FrozenSet[str]:
        return parameter_names(self.tree)

    def builtins_used(self) -> FrozenSet[str]:
        return called_builtins(self.tree)

    def evaluate(self, ctx: EvalContext, call: CallContext) -> Any:
        return evaluate(self.tree, ctx, call)

    def body(self) -> str:
        return format_expression(self.tree)


@dataclass(frozen=True)
class BuiltinRelation(RelationStrategy):
    """按参数顺序调用注册表中的内置函数"""
    name: str
    args: Tuple[str, ...]

    kind: ClassVar[str] = "builtin"

    @classmethod
    def from_body(cls, body: Any) -> "BuiltinRelation":
        if not isinstance(body, Mapping) or set(body) - {"name", "args"} or "name" not in body:
            raise SchemaError(f"builtin 关系的 body 必须是 {{name, args}}，实际为 {body!r}")
        args = body.get("args", [])
        if not isinstance(body["name"], str) or not isinstance(args, list) or not all(isinstance(a, str) for a in args):
            raise SchemaError(f"builtin 关系的 name/args 类型错误: {body!r}")
        return cls(body["name"], tuple(args))

    def parameters(self) -> FrozenSet[str]:
        return frozenset(self.args)

    def builtins_used(self) -> FrozenSet[str]:
        return frozenset({self.name})

    def evaluate(self, ctx: EvalContext, call: CallContext) -> Any:
        values = tuple(_bound(ctx, name) for name in self.args)
        return ctx.builtins().call(self.name, values, call)

    def body(self) -> Dict[str, Any]:
        return {"name": self.name, "args": list(self.args)}


@dataclass(frozen=True)
class TableQueryRelation(RelationStrategy):
    """
    数据表查询：table 与 key 为参数名；key_column / value_column 为列名，
    以 '$' 开头时表示取对应参数的值作为列名
    """
    table: str
    key: str
    key_column: str
    value_column: str

    kind: ClassVar[str] = "table-query"

    @classmethod
    def from_body(cls, body: Any) -> "TableQueryRelation":
        required = {"table", "key", "key_column", "value_column"}
        if not isinstance(body, Mapping) or set(body) != required:
            raise SchemaError(f"table-query 关系的 body 必须恰好包含 {sorted(required)}，实际为 {body!r}")
        if not all(isinstance(body[k], str) for k in required):
            raise SchemaError(f"table-query 关系的字段必须是文本: {body!r}")
        return cls(body["table"], body["key"], body["key_column"], body["value_column"])

    def _column_parameters(self) -> List[str]:
        return [c[len(PARAMETER_PREFIX):] for c in (self.key_column, self.value_column) if c.startswith(PARAMETER_PREFIX)]

    def parameters(self) -> FrozenSet[str]:
        return frozenset([self.table, self.key, *self._column_parameters()])

    def _column(self, ctx: EvalContext, column: str) -> str:
        if column.startswith(PARAMETER_PREFIX):
            value = _bound(ctx, column[len(PARAMETER_PREFIX):])
            if not isinstance(value, str):
                raise TypeMismatch(f"列名参数必须是文本，实际为 {value!r}")
            return value
        return column

    def evaluate(self, ctx: EvalContext, call: CallContext) -> Any:
        handle = _bound(ctx, self.table)
        if not isinstance(handle, TableHandle):
            raise TypeMismatch(f"参数 {self.table} 不是数据表句柄: {handle!r}")
        table = ctx.resolve_table(handle)
        return table.lookup(self._column(ctx, self.key_column), _bound(ctx, self.key), self._column(ctx, self.value_column))

    def body(self) -> Dict[str, str]:
        return {
            "table": self.table,
            "key": self.key,
            "key_column": self.key_column,
            "value_column": self.value_column,
        }


@dataclass(frozen=True)
class IdentityRelation(RelationStrategy):
    """恒等映射：目标取唯一参数的值"""
    parameter: str

    kind: ClassVar[str] = "identity"

    @classmethod
    def from_body(cls, body: Any) -> "IdentityRelation":
        if not isinstance(body, str):
            raise SchemaError(f"identity 关系的 body 必须是参数名，实际为 {body!r}")
        return cls(body)

    def parameters(self) -> FrozenSet[str]:
        return frozenset({self.parameter})

    def evaluate(self, ctx: EvalContext, call: CallContext) -> Any:
        return _bound(ctx, self.parameter)

    def body(self) -> str:
        return self.parameter


def _bound(ctx: EvalContext, name: str) -> Any:
    try:
        return ctx.bindings[name]
    except KeyError:
        raise UnboundParameter(f"参数未绑定: {name}") from None


class RelationStrategyManager:
    """关系策略管理器 - 按种类选择策略解码文档"""

    def __init__(self, strategies: Optional[List[Type[RelationStrategy]]] = None):
        self.strategies = strategies or [
            ExpressionRelation,
            BuiltinRelation,
            TableQueryRelation,
            IdentityRelation,
        ]

    @property
    def kinds(self) -> List[str]:
        return [strategy.kind for strategy in self.strategies]

    def from_document(self, document: Any, where: str = "relation") -> RelationStrategy:
        if not isinstance(document, Mapping) or set(document) != {"kind", "body"}:
            raise SchemaError(f"{where} 必须恰好包含 kind 与 body 字段，实际为 {document!r}")
        kind = document["kind"]
        for strategy in self.strategies:
            if strategy.can_handle(kind):
                try:
                    return strategy.from_body(document["body"])
                except SchemaError:
                    raise
                except ChgError as e:
                    logger.debug(f"{where} 解码失败: {e}")
                    raise SchemaError(f"{where} 无法解析: {e}") from e
        raise SchemaError(f"{where} 的 kind 未知: {kind!r}，可选 {self.kinds}")


_MANAGER = RelationStrategyManager()


def relation_from_document(document: Any, where: str = "relation") -> RelationStrategy:
    return _MANAGER.from_document(document, where)


def expression(text: str) -> ExpressionRelation:
    """表达式关系的简写"""
    return ExpressionRelation.from_text(text)


def builtin(name: str, *args: str) -> BuiltinRelation:
    return BuiltinRelation(name, tuple(args))


def identity(parameter: str) -> IdentityRelation:
    return IdentityRelation(parameter)


def table_query(table: str, key: str, key_column: str, value_column: str) -> TableQueryRelation:
    return TableQueryRelation(table, key, key_column, value_column)
