"""
配置管理模块 - 统一管理所有配置项
"""
import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .exceptions import ConfigurationError

SCHEMA_PATH = Path(__file__).with_name("_conf_schema.json")


@dataclass
class SolverSettings:
    """求解器配置"""
    MAX_ITERATIONS: int = 10_000  # 迭代帧上限
    MAX_FIRINGS: int = 1_000_000  # 边求值次数上限
    DEFAULT_SEED: int = 0
    TRACE_LEVEL: str = "none"


@dataclass
class ModelIOConfig:
    """模型读写配置"""
    SCHEMA_VERSION: str = "1"
    MODEL_SUFFIX: str = ".chg"
    TYPE_INFERENCE_ROWS: int = 100
    TABLE_CACHE_TTL_SECONDS: float = 600.0


@dataclass
class MicrogridConfig:
    """微电网配置"""
    TRICKLE_RATE_FRACTION: float = 0.1  # 涓流区充电速率占比
    TOLERANCE: float = 1e-9
    EDGE_WEIGHT: float = 1.0
    CRITICAL_LIGHTS_SHARE: float = 0.5
    CRITICAL_EQUIPMENT_SHARE: float = 0.67
    PEAK_IRRADIANCE: float = 1000.0
    SOLAR_NOISE_FRACTION: float = 0.1
    LOAD_NOISE_FRACTION: float = 0.1
    DATA_HOURS: int = 8784  # 闰年小时数，保证全年小时索引都可查询


@dataclass
class PlotConfig:
    """绘图配置"""
    WIDTH_PX: int = 800
    HEIGHT_PX: int = 400
    SVG_HASH_SALT: str = "chg-twin"


@dataclass
class LoggingConfig:
    """日志配置"""
    ENABLE_DEBUG: bool = False
    ENABLE_PERFORMANCE_LOGGING: bool = True
    LOG_LEVEL: str = "WARNING"


# 用户配置分区名 → (EngineConfig 属性, 配置类)
_SECTIONS = {
    "Solver": ("solver", SolverSettings),
    "Model_IO": ("model_io", ModelIOConfig),
    "Microgrid": ("microgrid", MicrogridConfig),
    "Plot": ("plot", PlotConfig),
    "Logging": ("logging", LoggingConfig),
}

_SCHEMA_TYPES = {
    "int": (int,),
    "float": (int, float),
    "bool": (bool,),
    "string": (str,),
}


def load_schema(path: Optional[Path] = None) -> Dict[str, Any]:
    """读取配置说明文件"""
    try:
        with open(path or SCHEMA_PATH, encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"无法读取配置说明: {e}") from e


@dataclass
class EngineConfig:
    """引擎总配置"""
    solver: SolverSettings = field(default_factory=SolverSettings)
    model_io: ModelIOConfig = field(default_factory=ModelIOConfig)
    microgrid: MicrogridConfig = field(default_factory=MicrogridConfig)
    plot: PlotConfig = field(default_factory=PlotConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    @classmethod
    def create_default(cls) -> "EngineConfig":
        """创建默认配置"""
        return cls(
            solver=SolverSettings(),
            model_io=ModelIOConfig(),
            microgrid=MicrogridConfig(),
            plot=PlotConfig(),
            logging=LoggingConfig(),
        )

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], schema: Optional[Dict[str, Any]] = None) -> "EngineConfig":
        """
        按配置说明校验用户配置并覆盖默认值

        Args:
            mapping: 形如 {"Solver": {"Max_Firings": 500}} 的配置
            schema: 配置说明，默认读取包内 _conf_schema.json
        """
        schema = schema or load_schema()
        config = cls.create_default()

        for section_name, values in mapping.items():
            if section_name not in _SECTIONS or section_name not in schema:
                raise ConfigurationError(f"未知配置分区: {section_name}")
            if not isinstance(values, Mapping):
                raise ConfigurationError(f"配置分区 {section_name} 必须是对象")

            attribute, _ = _SECTIONS[section_name]
            items = schema[section_name].get("items", {})
            updates = {}
            for key, value in values.items():
                if key not in items:
                    raise ConfigurationError(f"未知配置项: {section_name}.{key}")
                item = items[key]
                expected = _SCHEMA_TYPES.get(item.get("type"), (object,))
                if isinstance(value, bool) and bool not in expected:
                    raise ConfigurationError(f"配置项 {section_name}.{key} 类型应为 {item.get('type')}")
                if not isinstance(value, expected):
                    raise ConfigurationError(f"配置项 {section_name}.{key} 类型应为 {item.get('type')}")
                if "enum" in item and value not in item["enum"]:
                    raise ConfigurationError(f"配置项 {section_name}.{key} 只能取 {item['enum']}")
                updates[key.upper()] = value

            setattr(config, attribute, replace(getattr(config, attribute), **updates))

        return config

    @classmethod
    def from_file(cls, path: str) -> "EngineConfig":
        try:
            with open(path, encoding="utf-8") as handle:
                mapping = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"无法读取配置文件 {path}: {e}") from e
        if not isinstance(mapping, Mapping):
            raise ConfigurationError("配置文件顶层必须是对象")
        return cls.from_mapping(mapping)

    def apply_environment(self, environ: Optional[Mapping[str, str]] = None) -> "EngineConfig":
        """应用环境变量覆盖（CHG_MAX_FIRINGS）"""
        environ = os.environ if environ is None else environ
        raw = environ.get("CHG_MAX_FIRINGS")
        if raw is None or raw == "":
            return self
        try:
            max_firings = int(raw)
        except ValueError as e:
            raise ConfigurationError(f"CHG_MAX_FIRINGS 必须是整数: {raw!r}") from e
        if max_firings < 1:
            raise ConfigurationError("CHG_MAX_FIRINGS 必须不小于 1")
        self.solver = replace(self.solver, MAX_FIRINGS=max_firings)
        return self

    def to_mapping(self) -> Dict[str, Dict[str, Any]]:
        """导出为用户配置格式"""
        result = {}
        for section_name, (attribute, _) in _SECTIONS.items():
            section = getattr(self, attribute)
            result[section_name] = {
                "_".join(part.capitalize() for part in f.name.split("_")): getattr(section, f.name)
                for f in fields(section)
            }
        return result
