"""
电网参与者与电网描述
"""
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, ClassVar, Dict, List, Mapping, Optional, Sequence, Tuple, Type

from ..exceptions import DocumentParseError, IoError, SpecInvariantViolation

ROLE_PV = "pv"
ROLE_BESS = "bess"
ROLE_GENERATOR = "generator"
ROLE_LOAD = "load"
ROLE_BUILDING = "building"
ROLE_UTILITY = "utility"

SOURCE_ROLES = (ROLE_PV, ROLE_BESS, ROLE_GENERATOR, ROLE_UTILITY)
SINK_ROLES = (ROLE_LOAD, ROLE_BUILDING)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SpecInvariantViolation(message)


def _fraction(value: float, name: str, actor: str) -> None:
    _require(0 <= value <= 1, f"{actor}: {name} 必须在 [0, 1] 内，实际为 {value}")


def _non_negative(value: float, name: str, actor: str) -> None:
    _require(value >= 0, f"{actor}: {name} 不能为负，实际为 {value}")


@dataclass(frozen=True)
class ActorSpec:
    """所有参与者共有的故障参数"""
    name: str
    prob_failing: float = 0.0
    prob_fixed: float = 0.0

    role: ClassVar[str] = ""

    def check(self) -> None:
        _require(bool(self.name), "参与者名称不能为空")
        _fraction(self.prob_failing, "prob_failing", self.name)
        _fraction(self.prob_fixed, "prob_fixed", self.name)

    @property
    def is_source(self) -> bool:
        return self.role in SOURCE_ROLES

    @property
    def is_sink(self) -> bool:
        return self.role in SINK_ROLES

    def to_mapping(self) -> Dict[str, Any]:
        return {"role": self.role, **asdict(self)}


@dataclass(frozen=True)
class PVSpec(ActorSpec):
    area: float = 100.0  # m²
    efficiency: float = 0.18

    role: ClassVar[str] = ROLE_PV

    def check(self) -> None:
        super().check()
        _non_negative(self.area, "area", self.name)
        _fraction(self.efficiency, "efficiency", self.name)


@dataclass(frozen=True)
class BESSSpec(ActorSpec):
    charge_capacity: float = 50.0  # kWh
    starting_level: float = 25.0  # kWh
    charge_efficiency: float = 0.95
    max_output: float = 10.0  # kW
    max_charge_rate: float = 10.0  # kW
    scarcity_factor: float = 1.0
    trickle_prop: float = 0.2
    base_cost: float = 0.05  # $/kWh

    role: ClassVar[str] = ROLE_BESS

    def check(self) -> None:
        super().check()
        _require(self.charge_capacity > 0, f"{self.name}: charge_capacity 必须为正")
        _require(0 <= self.starting_level <= self.charge_capacity,
                 f"{self.name}: starting_level 必须在 [0, charge_capacity] 内")
        _fraction(self.charge_efficiency, "charge_efficiency", self.name)
        _fraction(self.trickle_prop, "trickle_prop", self.name)
        for name in ("max_output", "max_charge_rate", "scarcity_factor", "base_cost"):
            _non_negative(getattr(self, name), name, self.name)


@dataclass(frozen=True)
class GeneratorSpec(ActorSpec):
    fuel_capacity: float = 200.0  # L
    starting_fuel: float = 200.0  # L
    max_output: float = 20.0  # kW
    max_consumption: float = 6.0  # L/h
    cost: float = 0.30  # $/kWh
    prob_refueling: float = 0.5  # 每天

    role: ClassVar[str] = ROLE_GENERATOR

    def check(self) -> None:
        super().check()
        _require(0 <= self.starting_fuel <= self.fuel_capacity,
                 f"{self.name}: starting_fuel 必须在 [0, fuel_capacity] 内")
        for name in ("max_output", "max_consumption", "cost"):
            _non_negative(getattr(self, name), name, self.name)
        _fraction(self.prob_refueling, "prob_refueling", self.name)


@dataclass(frozen=True)
class LoadSpec(ActorSpec):
    normal_load: float = 10.0  # kW
    critical_load: float = 4.0  # kW
    benefit: float = 1.0  # $/kWh
    scale: float = 1.0

    role: ClassVar[str] = ROLE_LOAD

    def check(self) -> None:
        super().check()
        _non_negative(self.critical_load, "critical_load", self.name)
        _require(self.critical_load <= self.normal_load, f"{self.name}: critical_load 不能大于 normal_load")
        _non_negative(self.scale, "scale", self.name)


@dataclass(frozen=True)
class BuildingSpec(ActorSpec):
    """建筑负荷来自数据表；未提供数据时按 base_kw 合成"""
    normal_key: str = "normal_kw"
    lights_key: str = "lights_kw"
    equipment_key: str = "equipment_kw"
    base_kw: float = 15.0
    lights_fraction: float = 0.2
    equipment_fraction: float = 0.5
    benefit: float = 2.0
    scale: float = 1.0

    role: ClassVar[str] = ROLE_BUILDING

    @property
    def table_name(self) -> str:
        return f"building {self.name}"

    def check(self) -> None:
        super().check()
        _non_negative(self.base_kw, "base_kw", self.name)
        _non_negative(self.scale, "scale", self.name)
        _require(self.lights_fraction >= 0 and self.equipment_fraction >= 0
                 and self.lights_fraction + self.equipment_fraction <= 1,
                 f"{self.name}: 照明与设备占比必须非负且之和不超过 1")


@dataclass(frozen=True)
class UtilitySpec(ActorSpec):
    cost: float = 0.15  # $/kWh
    max_import: float = 1000.0  # kW

    role: ClassVar[str] = ROLE_UTILITY

    def check(self) -> None:
        super().check()
        _non_negative(self.cost, "cost", self.name)
        _non_negative(self.max_import, "max_import", self.name)


ACTOR_TYPES: Dict[str, Type[ActorSpec]] = {
    cls.role: cls for cls in (PVSpec, BESSSpec, GeneratorSpec, LoadSpec, BuildingSpec, UtilitySpec)
}


def actor_from_mapping(record: Mapping[str, Any]) -> ActorSpec:
    record = dict(record)
    role = record.pop("role", None)
    actor_type = ACTOR_TYPES.get(role)
    if actor_type is None:
        raise SpecInvariantViolation(f"未知的参与者类型: {role!r}，可选 {sorted(ACTOR_TYPES)}")
    known = {f.name for f in fields(actor_type)}
    unknown = set(record) - known
    if unknown:
        raise SpecInvariantViolation(f"{role} 参与者含未知字段: {sorted(unknown)}")
    return actor_type(**record)


@dataclass(frozen=True)
class StartDate:
    year: int = 2004
    day: int = 1  # 1-366
    hour: int = 0  # 0-23


Connectivity = Tuple[Tuple[bool, ...], ...]


@dataclass(frozen=True)
class GridSpec:
    """
    电网描述

    connectivity[i][j] 为真表示参与者 i 可以从参与者 j 获得功率
    """
    actors: Tuple[ActorSpec, ...]
    connectivity: Connectivity
    island_mode: bool = False
    has_random_failure: bool = False
    time_step: int = 3600  # 秒
    start: StartDate = field(default_factory=StartDate)
    use_random_date: bool = False
    min_year: int = 2000
    max_year: int = 2010

    def __post_init__(self):
        object.__setattr__(self, "actors", tuple(self.actors))
        object.__setattr__(self, "connectivity", tuple(tuple(bool(c) for c in row) for row in self.connectivity))
        self.check()

    def check(self) -> None:
        _require(len(self.actors) > 0, "电网至少需要一个参与者")
        names = [actor.name for actor in self.actors]
        _require(len(set(names)) == len(names), f"参与者名称重复: {names}")
        for actor in self.actors:
            actor.check()
        size = len(self.actors)
        _require(len(self.connectivity) == size and all(len(row) == size for row in self.connectivity),
                 f"connectivity 必须是 {size}×{size} 矩阵")
        _require(not any(self.connectivity[i][i] for i in range(size)), "connectivity 的对角线必须为假")
        _require(self.time_step > 0, "time_step 必须为正")
        _require(1 <= self.start.day <= 366 and 0 <= self.start.hour <= 23, f"起始日期无效: {self.start}")
        _require(self.min_year <= self.max_year, "min_year 不能大于 max_year")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(actor.name for actor in self.actors)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def of_role(self, role: str) -> List[ActorSpec]:
        return [actor for actor in self.actors if actor.role == role]

    def with_island_mode(self, island_mode: bool) -> "GridSpec":
        return replace(self, island_mode=island_mode)

    @classmethod
    def wired(cls, actors: Sequence[ActorSpec], **options) -> "GridSpec":
        """
        按常规接线构造：负荷从所有电源取电，储能从光伏充电，
        电网接收光伏余电
        """
        actors = tuple(actors)
        matrix = []
        for receiver in actors:
            row = []
            for provider in actors:
                if receiver is provider:
                    row.append(False)
                elif receiver.is_sink:
                    row.append(provider.is_source)
                elif receiver.role in (ROLE_BESS, ROLE_UTILITY):
                    row.append(provider.role == ROLE_PV)
                else:
                    row.append(False)
            matrix.append(tuple(row))
        return cls(actors=actors, connectivity=tuple(matrix), **options)

    @classmethod
    def default(cls, island_mode: bool = False, has_random_failure: bool = True) -> "GridSpec":
        """每类参与者各一个的示例电网"""
        actors = (
            PVSpec("PV1", prob_failing=0.01, prob_fixed=0.3),
            BESSSpec("BESS1", prob_failing=0.005, prob_fixed=0.3),
            GeneratorSpec("Gen1", prob_failing=0.01, prob_fixed=0.2),
            LoadSpec("Load1", prob_failing=0.005, prob_fixed=0.5),
            BuildingSpec("Building1", prob_failing=0.005, prob_fixed=0.5),
            UtilitySpec("Utility", prob_failing=0.01, prob_fixed=0.5),
        )
        return cls.wired(actors, island_mode=island_mode, has_random_failure=has_random_failure)

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "GridSpec":
        """由 JSON 对象构造（模型文档 metadata.microgrid 或 --spec 文件）"""
        mapping = dict(mapping)
        allowed = {f.name for f in fields(cls)}
        unknown = set(mapping) - allowed
        if unknown:
            raise SpecInvariantViolation(f"电网描述含未知字段: {sorted(unknown)}")
        if "actors" not in mapping:
            raise SpecInvariantViolation("电网描述缺少 actors")
        actors = tuple(actor_from_mapping(record) for record in mapping.pop("actors"))
        start = mapping.pop("start", None)
        if start is not None:
            try:
                mapping["start"] = StartDate(**start)
            except TypeError as e:
                raise SpecInvariantViolation(f"起始日期无效: {start}") from e
        if "connectivity" not in mapping:
            return cls.wired(actors, **mapping)
        return cls(actors=actors, **mapping)

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "actors": [actor.to_mapping() for actor in self.actors],
            "connectivity": [list(row) for row in self.connectivity],
            "island_mode": self.island_mode,
            "has_random_failure": self.has_random_failure,
            "time_step": self.time_step,
            "start": asdict(self.start),
            "use_random_date": self.use_random_date,
            "min_year": self.min_year,
            "max_year": self.max_year,
        }


def scenario_spec(scenario: str, base: Optional[GridSpec] = None) -> GridSpec:
    """islanded / connected 两个演示场景"""
    base = base or GridSpec.default()
    if scenario == "islanded":
        return base.with_island_mode(True)
    if scenario == "connected":
        return base.with_island_mode(False)
    raise SpecInvariantViolation(f"未知场景: {scenario!r}，可选 islanded / connected")


def load_grid_spec(path: str) -> GridSpec:
    """
    读取电网描述文件

    既可以是电网描述本身，也可以是带 metadata.microgrid 的模型文档
    """
    try:
        with open(path, encoding="utf-8") as handle:
            mapping = json.load(handle)
    except OSError as e:
        raise IoError(f"无法读取电网描述 {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DocumentParseError(f"电网描述不是合法的 JSON: {e.msg}", e.lineno, e.colno) from e
    if isinstance(mapping, dict) and "actors" not in mapping:
        mapping = mapping.get("metadata", {}).get("microgrid")
    if not isinstance(mapping, dict):
        raise SpecInvariantViolation(f"{path} 中没有电网描述")
    return GridSpec.from_mapping(mapping)
