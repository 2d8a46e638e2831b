"""
数据表服务 - CSV 读写与合成数据生成
"""
import csv
import math
import os
import re
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..config import ModelIOConfig
from ..core.tables import Column, Table
from ..exceptions import ConfigurationError, EmptyFile, IoError, RaggedRow, TypeInferenceConflict
from ..utils.decorators import cache_result
from ..utils.logger import logger

_INTEGER_PATTERN = re.compile(r"[+-]?\d+")
_DEFAULTS = ModelIOConfig()


def _parse_integer(cell: str) -> int:
    text = cell.strip()
    if not _INTEGER_PATTERN.fullmatch(text):
        raise ValueError(cell)
    return int(text)


def _parse_real(cell: str) -> float:
    value = float(cell.strip())
    if not math.isfinite(value):
        raise ValueError(cell)
    return value


def _parse_boolean(cell: str) -> bool:
    lowered = cell.strip().lower()
    if lowered not in ("true", "false"):
        raise ValueError(cell)
    return lowered == "true"


_PARSERS: Dict[str, Callable[[str], Any]] = {
    "integer": _parse_integer,
    "real": _parse_real,
    "boolean": _parse_boolean,
    "text": str,
}


def _conforms(cells: Sequence[str], column_type: str) -> bool:
    parser = _PARSERS[column_type]
    try:
        for cell in cells:
            parser(cell)
    except ValueError:
        return False
    return True


def infer_column_type(cells: Sequence[str]) -> str:
    """依次尝试 integer、real、boolean，全部不符合时为 text"""
    if not cells:
        return "text"
    for column_type in ("integer", "real", "boolean"):
        if _conforms(cells, column_type):
            return column_type
    return "text"


def _table_cache_key(path: str, name: Optional[str] = None, inference_rows: int = _DEFAULTS.TYPE_INFERENCE_ROWS):
    absolute = os.path.abspath(path)
    try:
        modified = os.stat(absolute).st_mtime_ns
    except OSError:
        modified = None
    return (absolute, modified, name, inference_rows)


@cache_result(cache_key_func=_table_cache_key, ttl_seconds=_DEFAULTS.TABLE_CACHE_TTL_SECONDS)
def load_csv_table(path: str, name: Optional[str] = None,
                   inference_rows: int = _DEFAULTS.TYPE_INFERENCE_ROWS) -> Table:
    """
    读取带表头的 CSV 文件

    Args:
        path: 文件路径
        name: 表名，默认取文件名（不含扩展名）
        inference_rows: 用于推断列类型的行数

    Returns:
        Table: 列类型由前 inference_rows 行推断的数据表
    """
    table_name = name or os.path.splitext(os.path.basename(path))[0]
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            records = list(csv.reader(handle))
    except OSError as e:
        raise IoError(f"无法读取 CSV 文件 {path}: {e}") from e
    except csv.Error as e:
        raise RaggedRow(f"CSV 文件 {path} 格式错误: {e}") from e

    if not records:
        raise EmptyFile(f"CSV 文件为空: {path}")
    header, body = records[0], records[1:]
    for line_number, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise RaggedRow(f"{path} 第 {line_number} 行有 {len(row)} 个单元格，表头有 {len(header)} 列")

    sample = body[:inference_rows]
    column_types = [infer_column_type([row[i] for row in sample]) for i in range(len(header))]

    rows: List[tuple] = []
    for line_number, row in enumerate(body, start=2):
        values = []
        for column_name, column_type, cell in zip(header, column_types, row):
            try:
                values.append(_PARSERS[column_type](cell))
            except ValueError:
                raise TypeInferenceConflict(
                    f"{path} 第 {line_number} 行列 '{column_name}' 的值 {cell!r} 不是推断出的 {column_type}"
                ) from None
        rows.append(tuple(values))

    columns = tuple(Column(column_name, column_type) for column_name, column_type in zip(header, column_types))
    logger.debug(f"读取数据表 {table_name}: {len(rows)} 行, 列类型 {column_types}")
    return Table(table_name, columns, tuple(rows))


def _format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv_table(table: Table, path: str) -> None:
    """写出 LF 结尾的 CSV，实数使用可往返的最短形式"""
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(table.column_names)
            for row in table.rows:
                writer.writerow([_format_cell(value) for value in row])
    except OSError as e:
        raise IoError(f"无法写入 CSV 文件 {path}: {e}") from e


def table_from_columns(name: str, columns: Dict[str, Sequence[Any]], types: Dict[str, str]) -> Table:
    """由等长的列构造数据表"""
    names = list(columns)
    length = len(columns[names[0]]) if names else 0
    rows = tuple(tuple(columns[column][i] for column in names) for i in range(length))
    return Table(name, tuple(Column(column, types[column]) for column in names), rows)


# ---- 合成数据 ----

def _hour_grid(hours: int):
    hour_index = np.arange(1, hours + 1, dtype=np.int64)
    h = hour_index - 1
    return hour_index, h // 24 + 1, h % 24, h // 24


def _noise(rng: np.random.Generator, hours: int, noise_fraction: float) -> np.ndarray:
    if noise_fraction == 0:
        return np.zeros(hours)
    return rng.uniform(-noise_fraction, noise_fraction, size=hours)


def generate_synthetic_solar(hours: int, seed: int = 0, peak_irradiance: float = 1000.0,
                             noise_fraction: float = 0.1, name: str = "solar") -> Table:
    """
    合成逐时水平面总辐照（Wh/m²）

    季节项 0.75 + 0.25·cos(2π(d−172)/365)，日变化项在 6 至 18 时取 sin(π(t−6)/12)，
    其余时刻为 0；噪声为 [−noise_fraction, noise_fraction] 上的均匀抽样。
    """
    if hours < 1:
        raise ConfigurationError(f"小时数必须不小于 1，实际为 {hours}")
    if not 0 <= noise_fraction < 1:
        raise ConfigurationError(f"噪声比例必须在 [0, 1) 内，实际为 {noise_fraction}")

    rng = np.random.default_rng(seed)
    hour_index, day, hour, _ = _hour_grid(hours)
    seasonal = 0.75 + 0.25 * np.cos(2 * np.pi * (day - 172) / 365)
    daytime = (hour >= 6) & (hour <= 18)
    diurnal = np.where(daytime, np.sin(np.pi * (hour - 6) / 12), 0.0)
    ghi = np.maximum(0.0, peak_irradiance * seasonal * diurnal * (1 + _noise(rng, hours, noise_fraction)))

    return table_from_columns(
        name,
        {"hour_index": [int(i) for i in hour_index], "ghi": [float(v) for v in ghi]},
        {"hour_index": "integer", "ghi": "real"},
    )


def generate_synthetic_building_load(hours: int, seed: int = 0, base_kw: float = 10.0,
                                     lights_fraction: float = 0.2, equipment_fraction: float = 0.5,
                                     noise_fraction: float = 0.1, name: str = "building") -> Table:
    """
    合成建筑逐时负荷（kW）

    工作日（第 0 天为周一）9 至 17 时系数 1.0，其余时刻与周末 0.3；
    normal = lights + equipment + 其余部分。
    """
    if hours < 1:
        raise ConfigurationError(f"小时数必须不小于 1，实际为 {hours}")
    if lights_fraction < 0 or equipment_fraction < 0 or lights_fraction + equipment_fraction > 1:
        raise ConfigurationError("照明与设备占比必须非负且之和不超过 1")

    rng = np.random.default_rng(seed)
    hour_index, _, hour, day_offset = _hour_grid(hours)
    weekday = day_offset % 7 < 5
    occupied = weekday & (hour >= 9) & (hour < 17)
    factor = np.where(occupied, 1.0, 0.3)
    normal = base_kw * factor * (1 + _noise(rng, hours, noise_fraction))
    lights = normal * lights_fraction
    equipment = normal * equipment_fraction

    return table_from_columns(
        name,
        {
            "hour_index": [int(i) for i in hour_index],
            "normal_kw": [float(v) for v in normal],
            "lights_kw": [float(v) for v in lights],
            "equipment_kw": [float(v) for v in equipment],
        },
        {"hour_index": "integer", "normal_kw": "real", "lights_kw": "real", "equipment_kw": "real"},
    )
