"""
值模型 - 布尔、整数、实数、文本、元组与数据表句柄

值直接使用 Python 原生类型表示：bool、int、float、str、tuple，
数据表引用使用不可变的 TableHandle。
"""
import math
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Tuple, Union

from ..exceptions import NumericOverflow, TypeMismatch

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1


@dataclass(frozen=True)
class TableHandle:
    """指向已加载数据表的不透明引用"""
    name: str
    path: Optional[str] = None

    def __str__(self) -> str:
        return f"<table {self.name}>"


Value = Union[bool, int, float, str, Tuple[Any, ...], TableHandle]


class ValueKind(str, Enum):
    BOOLEAN = "boolean"
    INTEGER = "integer"
    REAL = "real"
    TEXT = "text"
    TUPLE = "tuple"
    TABLE = "table-handle"


def value_kind(value: Any) -> ValueKind:
    """返回值的种类；bool 必须先于 int 判断"""
    if isinstance(value, bool):
        return ValueKind.BOOLEAN
    if isinstance(value, int):
        return ValueKind.INTEGER
    if isinstance(value, float):
        return ValueKind.REAL
    if isinstance(value, str):
        return ValueKind.TEXT
    if isinstance(value, tuple):
        return ValueKind.TUPLE
    if isinstance(value, TableHandle):
        return ValueKind.TABLE
    raise TypeMismatch(f"不是合法的值: {value!r} ({type(value).__name__})")


def is_numeric(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _real_bits(value: float) -> bytes:
    return struct.pack("<d", value)


def values_equal(left: Any, right: Any) -> bool:
    """按种类比较；实数逐位比较"""
    kind = value_kind(left)
    if kind is not value_kind(right):
        return False
    if kind is ValueKind.REAL:
        return _real_bits(left) == _real_bits(right)
    if kind is ValueKind.TUPLE:
        return len(left) == len(right) and all(values_equal(a, b) for a, b in zip(left, right))
    return left == right


def check_value(value: Any) -> Any:
    """校验并返回值：拒绝非值、非有限实数和超出64位的整数"""
    kind = value_kind(value)
    if kind is ValueKind.INTEGER and not INT64_MIN <= value <= INT64_MAX:
        raise NumericOverflow(f"整数超出64位范围: {value}")
    if kind is ValueKind.REAL and not math.isfinite(value):
        raise NumericOverflow(f"实数不是有限值: {value}")
    if kind is ValueKind.TUPLE:
        for item in value:
            check_value(item)
    return value


def format_value(value: Any) -> str:
    """面向用户的文本形式：文本原样输出，布尔为 true/false，实数为最短往返形式"""
    kind = value_kind(value)
    if kind is ValueKind.BOOLEAN:
        return "true" if value else "false"
    if kind is ValueKind.REAL:
        return repr(value)
    if kind is ValueKind.TUPLE:
        return "(" + ", ".join(format_value(item) for item in value) + ")"
    return str(value)


def parse_cli_value(text: str, type_override: Optional[str] = None) -> Any:
    """
    解析命令行输入值

    "true"/"false" → 布尔，整数形式 → 整数，数字 → 实数，其余（或带引号）→ 文本
    """
    if type_override:
        return coerce_text(text, type_override)
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        number = float(text)
    except ValueError:
        return text
    return number if math.isfinite(number) else text


def coerce_text(text: str, kind: str) -> Any:
    """按显式类型把文本转换为值"""
    try:
        if kind == "integer":
            return int(text)
        if kind == "real":
            return float(text)
        if kind == "boolean":
            lowered = text.lower()
            if lowered not in ("true", "false"):
                raise ValueError(text)
            return lowered == "true"
        if kind == "text":
            return text
    except ValueError as e:
        raise TypeMismatch(f"无法把 {text!r} 解析为 {kind}") from e
    raise TypeMismatch(f"未知的值类型: {kind}")
