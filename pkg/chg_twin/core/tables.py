"""
数据表 - 按列类型约束的不可变行集合
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Tuple

from ..exceptions import TableLookupError
from .values import ValueKind, value_kind

COLUMN_TYPES = ("integer", "real", "boolean", "text")


@dataclass(frozen=True)
class Column:
    name: str
    type: str


@dataclass(frozen=True, eq=False)
class Table:
    """不可变数据表；查询键按值种类精确匹配"""
    name: str
    columns: Tuple[Column, ...]
    rows: Tuple[Tuple[Any, ...], ...]
    _indexes: Dict[str, Dict[Any, int]] = field(default_factory=dict, repr=False, compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        return (self.name, self.columns, self.rows) == (other.name, other.columns, other.rows)

    def __hash__(self) -> int:
        return hash((self.name, self.columns, len(self.rows)))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def column_names(self) -> List[str]:
        return [column.name for column in self.columns]

    def column_index(self, name: str) -> int:
        for index, column in enumerate(self.columns):
            if column.name == name:
                return index
        raise TableLookupError(f"数据表 '{self.name}' 没有列 '{name}'")

    def column(self, name: str) -> List[Any]:
        index = self.column_index(name)
        return [row[index] for row in self.rows]

    def iter_records(self) -> Iterator[Dict[str, Any]]:
        names = self.column_names
        for row in self.rows:
            yield dict(zip(names, row))

    def _index(self, key_column: str) -> Dict[Any, int]:
        index = self._indexes.get(key_column)
        if index is None:
            position = self.column_index(key_column)
            index = {}
            for row_number, row in enumerate(self.rows):
                cell = row[position]
                index.setdefault((value_kind(cell), cell), row_number)
            self._indexes[key_column] = index
        return index

    def lookup(self, key_column: str, key: Any, value_column: str) -> Any:
        """返回第一行 key_column == key 的 value_column 值"""
        value_position = self.column_index(value_column)
        row_number = self._index(key_column).get((value_kind(key), key))
        if row_number is None:
            raise TableLookupError(f"数据表 '{self.name}' 的列 '{key_column}' 中没有键 {key!r}")
        return self.rows[row_number][value_position]

    def scan(self, key_column: str, key: Any, value_column: str) -> Any:
        """逐行扫描的查询，与 lookup 等价"""
        key_position = self.column_index(key_column)
        value_position = self.column_index(value_column)
        kind = value_kind(key)
        for row in self.rows:
            if value_kind(row[key_position]) is kind and row[key_position] == key:
                return row[value_position]
        raise TableLookupError(f"数据表 '{self.name}' 的列 '{key_column}' 中没有键 {key!r}")


def column_type_of(kind: ValueKind) -> str:
    return {
        ValueKind.INTEGER: "integer",
        ValueKind.REAL: "real",
        ValueKind.BOOLEAN: "boolean",
    }.get(kind, "text")
