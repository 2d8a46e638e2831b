"""
微电网超图构造器 - 由电网描述实例化约束超图
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..config import EngineConfig, MicrogridConfig
from ..core.hypergraph import Hyperedge, Hypergraph, HypergraphBuilder, Node
from ..core.relations import RelationStrategy, builtin, expression, table_query
from ..core.tables import Table
from ..core.values import TableHandle
from ..exceptions import SpecInvariantViolation
from ..services.table_service import generate_synthetic_building_load, generate_synthetic_solar
from ..utils.logger import logger
from .actors import (
    ROLE_BESS,
    ROLE_BUILDING,
    ROLE_GENERATOR,
    ROLE_LOAD,
    ROLE_PV,
    ROLE_UTILITY,
    ActorSpec,
    BESSSpec,
    BuildingSpec,
    GeneratorSpec,
    GridSpec,
    LoadSpec,
    PVSpec,
    UtilitySpec,
)

SOLAR_TABLE = "solar"
HOUR_INDEX_COLUMN = "hour_index"
SUNLIGHT_COLUMN = "ghi"


@dataclass(frozen=True)
class InstantiationReport:
    """按类别统计的节点与边数量"""
    nodes: Mapping[str, int] = field(default_factory=dict)
    edges: Mapping[str, int] = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return sum(self.nodes.values())

    @property
    def edge_count(self) -> int:
        return sum(self.edges.values())

    def render(self) -> str:
        lines = [f"节点 {self.node_count} 个，边 {self.edge_count} 条"]
        for category in sorted(set(self.nodes) | set(self.edges)):
            lines.append(f"  {category}: 节点 {self.nodes.get(category, 0)}，边 {self.edges.get(category, 0)}")
        return "\n".join(lines)


class MicrogridBuilder:
    """
    微电网超图构造器

    每个参与者都有故障、供给、需求、成本与净功率节点，
    再按类型加上各自的参数与状态节点；所有参与者的供给与需求
    汇总到一条调度边，调度结果再拆回各参与者。
    """

    def __init__(self, spec: GridSpec, solar_table: Optional[Table] = None,
                 building_tables: Optional[Mapping[str, Table]] = None,
                 config: Optional[EngineConfig] = None):
        spec.check()
        self.spec = spec
        self.config = config or EngineConfig.create_default()
        self.settings: MicrogridConfig = self.config.microgrid
        self.solar_table = solar_table
        self.building_tables = dict(building_tables or {})
        self._builder = HypergraphBuilder()
        self._edges: List[Hyperedge] = []
        self._node_categories: Counter = Counter()
        self._edge_categories: Counter = Counter()

    # ---- 基本构件 ----

    def _node(self, node_id: str, category: str, initial: Any = None, unit: Optional[str] = None,
              description: str = "") -> str:
        self._builder.add_node(Node(node_id, label=node_id, description=description, unit=unit, initial=initial))
        self._node_categories[category] += 1
        return node_id

    def _edge(self, target: str, sources: Mapping[str, str], relation: RelationStrategy, category: str,
              advances: bool = False, viability: Optional[RelationStrategy] = None, suffix: str = "") -> None:
        edge_id = f"{'advance' if advances else 'compute'} {target}{suffix}"
        self._edges.append(Hyperedge(
            id=edge_id,
            sources=dict(sources),
            target=target,
            relation=relation,
            viability=viability,
            weight=self.settings.EDGE_WEIGHT,
            advances=advances,
        ))
        self._edge_categories[category] += 1

    def _derived(self, node_id: str, category: str, sources: Mapping[str, str], relation: RelationStrategy,
                 unit: Optional[str] = None, description: str = "") -> str:
        self._node(node_id, category, unit=unit, description=description)
        self._edge(node_id, sources, relation, category)
        return node_id

    def _stepped(self, node_id: str, category: str, initial: Any, sources: Mapping[str, str],
                 relation: RelationStrategy, unit: Optional[str] = None, description: str = "") -> str:
        """带初始值、由推进边逐帧更新的节点"""
        self._node(node_id, category, initial=initial, unit=unit, description=description)
        self._edge(node_id, sources, relation, category, advances=True)
        return node_id

    def _table(self, node_id: str, table: Table, category: str) -> str:
        self._builder.attach_table(table)
        return self._node(node_id, category, initial=TableHandle(table.name), description="数据表句柄")

    # ---- 全局节点 ----

    def _add_constants(self) -> None:
        c = "constants"
        self._node("seconds in minute", c, 60, "s")
        self._node("minutes in hour", c, 60, "min")
        self._derived("seconds in hour", c, {"m": "minutes in hour", "s": "seconds in minute"},
                      expression("m * s"), "s")
        self._node("hours in day", c, 24, "h")
        self._node("days in year", c, 365, "d")
        self._node("tolerance", c, self.settings.TOLERANCE)
        self._node("trickle rate fraction", c, self.settings.TRICKLE_RATE_FRACTION)
        self._node("critical lights share", c, self.settings.CRITICAL_LIGHTS_SHARE)
        self._node("critical equipment share", c, self.settings.CRITICAL_EQUIPMENT_SHARE)
        self._node("time step", c, self.spec.time_step, "s", "每帧的秒数")
        self._derived("time step hours", c, {"dt": "time step", "s": "seconds in hour"},
                      expression("dt / s"), "h")

    def _add_simulation(self) -> None:
        c = "simulation"
        spec = self.spec
        self._node("is islanded", c, spec.island_mode, description="所有公共电网断开时为真")
        self._node("has random failure", c, spec.has_random_failure, description="允许随机故障时为真")
        self._node("use random date", c, spec.use_random_date, description="随机选取起始日期时为真")
        self._node("min year", c, spec.min_year)
        self._node("max year", c, spec.max_year)

        fixed = not spec.use_random_date
        random_start = (
            ("start year", spec.start.year, {"lo": "min year", "hi": "max year"}, "randint(lo, hi)"),
            ("start day", spec.start.day, {"n": "days in year"}, "randint(1, n)"),
            ("start hour", spec.start.hour, {"n": "hours in day"}, "randint(0, n - 1)"),
        )
        for node_id, value, sources, body in random_start:
            self._node(node_id, c, value if fixed else None)
            self._edge(node_id, {"use": "use random date", **sources}, expression(body), c,
                       viability=expression("use"), suffix=" at random")

    def _add_timing(self) -> None:
        c = "timing"
        self._stepped("time", c, 0, {"t": "time", "dt": "time step"}, expression("t + dt"), "s",
                      "自起始时刻经过的秒数")
        self._derived("elapsed hours", c, {"t": "time", "s": "seconds in hour"},
                      builtin("timing_elapsed_hours", "t", "s"), "h")
        calendar = {"e": "elapsed hours", "y": "start year", "d": "start day", "h": "start hour"}
        for node_id, name in (("year", "timing_year"), ("day", "timing_day"), ("hour", "timing_hour"),
                              ("hour index", "timing_hour_index"), ("num leap years", "timing_num_leap_years")):
            self._derived(node_id, c, calendar, builtin(name, "e", "y", "d", "h"))
        self._derived("is leap year", c, {"y": "year"}, expression("is_leap_year(y)"))

    def _add_data(self) -> None:
        c = "data"
        solar = self.solar_table or generate_synthetic_solar(
            self.settings.DATA_HOURS,
            seed=0,
            peak_irradiance=self.settings.PEAK_IRRADIANCE,
            noise_fraction=self.settings.SOLAR_NOISE_FRACTION,
            name=SOLAR_TABLE,
        )
        if solar.name != SOLAR_TABLE:
            solar = Table(SOLAR_TABLE, solar.columns, solar.rows)
        self._table("solar table", solar, c)
        self._node("hour index column", c, HOUR_INDEX_COLUMN)
        self._node("sunlight column", c, SUNLIGHT_COLUMN)
        self._derived(
            "sunlight", c,
            {"tbl": "solar table", "k": "hour index", "kc": "hour index column", "vc": "sunlight column"},
            table_query("tbl", "k", "$kc", "$vc"), "Wh/m2",
        )

    # ---- 参与者 ----

    def _add_general(self, actor: ActorSpec) -> None:
        c = "actor"
        x = actor.name
        self._node(f"prob failing {x}", c, actor.prob_failing, description=f"{x} 每帧发生故障的概率")
        self._node(f"prob fixed {x}", c, actor.prob_fixed, description=f"{x} 故障后每帧修复的概率")
        self._stepped(
            f"is failing {x}", c, False,
            {"f": f"is failing {x}", "p": f"prob failing {x}", "q": f"prob fixed {x}", "r": "has random failure"},
            builtin("failure_step", "f", "p", "q", "r"),
        )
        index = self.spec.index_of(x)
        self._derived(f"state {x}", c, {"v": "state vector"}, expression(f"at(v, {index})"), "kW",
                      "获得功率为负，提供功率为正")
        self._stepped(
            f"cost incurred {x}", c, 0.0,
            {"c": f"cost incurred {x}", "s": f"state {x}", "p": f"cost {x}", "dt": "time step hours"},
            expression("c + max(s, 0.0) * p * dt"), "$",
        )
        if actor.is_sink:
            self._node(f"cost {x}", c, 0.0, "$/kWh")
            self._derived(f"supply {x}", c, {"f": f"is failing {x}"},
                          expression(f'tuple("{actor.role}", 0.0, 0.0, f, 0.0)'))
        else:
            self._node(f"demand {x}", c, (0.0, 0.0, 0.0))

    def _add_pv(self, actor: PVSpec) -> None:
        c = ROLE_PV
        x = actor.name
        self._node(f"area {x}", c, float(actor.area), "m2")
        self._node(f"efficiency {x}", c, float(actor.efficiency))
        self._node(f"cost {x}", c, 0.0, "$/kWh")
        self._derived(f"power available {x}", c,
                      {"i": "sunlight", "a": f"area {x}", "n": f"efficiency {x}"},
                      builtin("pv_supply", "i", "a", "n"), "kW")
        self._derived(f"supply {x}", c,
                      {"p": f"power available {x}", "c": f"cost {x}", "f": f"is failing {x}"},
                      expression('tuple("pv", p, c, f, 0.0)'))

    def _add_bess(self, actor: BESSSpec) -> None:
        c = ROLE_BESS
        x = actor.name
        self._node(f"charge capacity {x}", c, float(actor.charge_capacity), "kWh")
        self._node(f"charge efficiency {x}", c, float(actor.charge_efficiency))
        self._node(f"max output {x}", c, float(actor.max_output), "kW")
        self._node(f"max charge rate {x}", c, float(actor.max_charge_rate), "kW")
        self._node(f"scarcity factor {x}", c, float(actor.scarcity_factor), description=f"{x} 电量耗尽时的成本增益")
        self._node(f"trickle prop {x}", c, float(actor.trickle_prop), description="低于该电量比例时转为涓流充电")
        self._node(f"base cost {x}", c, float(actor.base_cost), "$/kWh")
        level = f"charge level {x}"
        self._stepped(
            level, c, float(actor.starting_level),
            {"l": level, "c": f"charge capacity {x}", "s": f"state {x}", "n": f"charge efficiency {x}",
             "mo": f"max output {x}", "mr": f"max charge rate {x}", "dt": "time step hours"},
            builtin("bess_level", "l", "c", "s", "n", "mo", "mr", "dt"), "kWh",
        )
        self._derived(f"soc {x}", c, {"l": level, "c": f"charge capacity {x}"}, expression("l / c"))
        self._derived(f"cost {x}", c,
                      {"b": f"base cost {x}", "k": f"scarcity factor {x}", "q": f"soc {x}"},
                      builtin("bess_effective_cost", "b", "k", "q"), "$/kWh")
        self._derived(f"discharge limit {x}", c,
                      {"l": level, "mo": f"max output {x}", "dt": "time step hours"},
                      builtin("bess_discharge_limit", "l", "mo", "dt"), "kW")
        self._derived(
            f"charge headroom {x}", c,
            {"l": level, "c": f"charge capacity {x}", "mr": f"max charge rate {x}", "tp": f"trickle prop {x}",
             "tf": "trickle rate fraction", "n": f"charge efficiency {x}", "dt": "time step hours"},
            builtin("bess_charge_limit", "l", "c", "mr", "tp", "tf", "n", "dt"), "kW",
        )
        self._derived(f"is charging {x}", c, {"s": f"state {x}"}, expression("s < 0.0"))
        self._derived(
            f"supply {x}", c,
            {"d": f"discharge limit {x}", "c": f"cost {x}", "f": f"is failing {x}", "h": f"charge headroom {x}"},
            expression('tuple("bess", d, c, f, h)'),
        )

    def _add_generator(self, actor: GeneratorSpec) -> None:
        c = ROLE_GENERATOR
        x = actor.name
        self._node(f"fuel capacity {x}", c, float(actor.fuel_capacity), "L")
        self._node(f"max output {x}", c, float(actor.max_output), "kW")
        self._node(f"max fuel consumption {x}", c, float(actor.max_consumption), "L/h")
        self._node(f"cost {x}", c, float(actor.cost), "$/kWh")
        self._node(f"prob refueling {x}", c, float(actor.prob_refueling), description="每天补油的概率")
        fuel = f"fuel level {x}"
        self._stepped(
            fuel, c, float(actor.starting_fuel),
            {"fl": fuel, "s": f"state {x}", "mo": f"max output {x}", "mc": f"max fuel consumption {x}",
             "dt": "time step hours", "rn": f"refuel now {x}", "cap": f"fuel capacity {x}", "tol": "tolerance"},
            builtin("generator_fuel", "fl", "s", "mo", "mc", "dt", "rn", "cap", "tol"), "L",
        )
        self._derived(f"out of fuel {x}", c, {"fl": fuel, "tol": "tolerance"}, expression("fl <= tol"))
        self._derived(f"power available {x}", c,
                      {"fl": fuel, "mo": f"max output {x}", "mc": f"max fuel consumption {x}", "dt": "time step hours"},
                      builtin("generator_available", "fl", "mo", "mc", "dt"), "kW")
        refuel = f"next refuel hour {x}"
        self._stepped(refuel, c, -1,
                      {"n": refuel, "e": "elapsed hours", "p": f"prob refueling {x}"},
                      builtin("refuel_schedule", "n", "e", "p"), "h", "下一次补油的小时，-1 表示当天不补油")
        self._derived(f"refuel now {x}", c, {"n": refuel, "e": "elapsed hours"}, expression("n == e"))
        self._derived(
            f"supply {x}", c,
            {"p": f"power available {x}", "o": f"out of fuel {x}", "c": f"cost {x}", "f": f"is failing {x}"},
            expression('tuple("generator", if(o, 0.0, p), c, f, 0.0)'),
        )

    def _add_demand(self, x: str, category: str, benefit: float, scale: float) -> None:
        self._node(f"benefit {x}", category, float(benefit), "$/kWh", f"满足 {x} 需求的收益")
        self._node(f"load scale {x}", category, float(scale))
        self._derived(
            f"demand {x}", category,
            {"c": f"critical load {x}", "n": f"normal load {x}", "b": f"benefit {x}", "k": f"load scale {x}"},
            expression("tuple(c * k, n * k, b)"),
        )

    def _add_load(self, actor: LoadSpec) -> None:
        c = ROLE_LOAD
        x = actor.name
        self._node(f"normal load {x}", c, float(actor.normal_load), "kW")
        self._node(f"critical load {x}", c, float(actor.critical_load), "kW", f"{x} 运行所需的最低功率")
        self._add_demand(x, c, actor.benefit, actor.scale)

    def _building_table(self, actor: BuildingSpec) -> Table:
        table = self.building_tables.get(actor.name)
        if table is None:
            table = generate_synthetic_building_load(
                self.settings.DATA_HOURS,
                seed=self.spec.index_of(actor.name),
                base_kw=actor.base_kw,
                lights_fraction=actor.lights_fraction,
                equipment_fraction=actor.equipment_fraction,
                noise_fraction=self.settings.LOAD_NOISE_FRACTION,
                name=actor.table_name,
            )
        if table.name != actor.table_name:
            table = Table(actor.table_name, table.columns, table.rows)
        missing = {actor.normal_key, actor.lights_key, actor.equipment_key, HOUR_INDEX_COLUMN} - set(table.column_names)
        if missing:
            raise SpecInvariantViolation(f"{actor.name} 的负荷数据缺少列: {sorted(missing)}")
        return table

    def _add_building(self, actor: BuildingSpec) -> None:
        c = ROLE_BUILDING
        x = actor.name
        self._table(f"load table {x}", self._building_table(actor), c)
        for kind, column in (("normal", actor.normal_key), ("lights", actor.lights_key),
                             ("equipment", actor.equipment_key)):
            self._node(f"{kind} key {x}", c, column)
            self._derived(
                f"{kind} load {x}", c,
                {"tbl": f"load table {x}", "k": "hour index", "kc": "hour index column", "vc": f"{kind} key {x}"},
                table_query("tbl", "k", "$kc", "$vc"), "kW",
            )
        self._derived(
            f"critical load {x}", c,
            {"a": "critical lights share", "b": "critical equipment share",
             "l": f"lights load {x}", "e": f"equipment load {x}", "n": f"normal load {x}"},
            expression("min(a * l + b * e, n)"), "kW",
        )
        self._add_demand(x, c, actor.benefit, actor.scale)

    def _add_utility(self, actor: UtilitySpec) -> None:
        c = ROLE_UTILITY
        x = actor.name
        self._node(f"cost {x}", c, float(actor.cost), "$/kWh")
        self._node(f"max import {x}", c, float(actor.max_import), "kW")
        self._derived(
            f"supply {x}", c,
            {"i": "is islanded", "m": f"max import {x}", "c": f"cost {x}", "f": f"is failing {x}"},
            expression('tuple("utility", if(i, 0.0, m), c, f, 0.0)'),
        )

    # ---- 汇总与调度 ----

    def _add_dispatch(self) -> None:
        c = "grid"
        names = self.spec.names
        self._node("names", c, names)

        cells = {}
        rows = []
        for i, receiver in enumerate(names):
            row = []
            for j, provider in enumerate(names):
                if i == j:
                    row.append("false")
                    continue
                node_id = self._node(f"{receiver} receives from {provider}", "connectivity",
                                     self.spec.connectivity[i][j])
                cells[f"c_{i}_{j}"] = node_id
                row.append(f"c_{i}_{j}")
            rows.append(f"tuple({', '.join(row)})")
        matrix = f"tuple({', '.join(rows)})" if len(names) > 1 else "tuple(tuple(false))"
        if cells:
            self._derived("connectivity matrix", c, cells, expression(matrix))
        else:
            self._node("connectivity matrix", c, ((False,),))

        for kind in ("supply", "demand"):
            params = {f"a{i}": f"{kind} {name}" for i, name in enumerate(names)}
            self._derived(f"{kind} tuples", c, params, expression(f"tuple({', '.join(params)})"))

        self._derived(
            "dispatch result", c,
            {"n": "names", "s": "supply tuples", "d": "demand tuples", "m": "connectivity matrix", "i": "is islanded"},
            builtin("dispatch", "n", "s", "d", "m", "i"),
        )
        self._derived("state vector", c, {"r": "dispatch result"}, expression("at(r, 0)"), "kW",
                      "各参与者的净功率")
        self._derived("unmet critical", c, {"r": "dispatch result"}, expression("at(r, 1)"), "kW")
        self._derived("curtailed power", c, {"r": "dispatch result"}, expression("at(r, 2)"), "kW")
        self._derived("load shed", c, {"r": "dispatch result"}, expression("at(r, 4)"), "kW")
        self._stepped("power wasted", c, 0.0,
                      {"w": "power wasted", "p": "curtailed power", "dt": "time step hours"},
                      expression("w + p * dt"), "kWh", "累计弃光电量")

        incurred = {f"a{i}": f"cost incurred {name}" for i, name in enumerate(names)}
        self._derived("total cost", c, incurred, expression(f"sum(tuple({', '.join(incurred)}))"), "$")

        for i, receiver in enumerate(names):
            for j, provider in enumerate(names):
                if self.spec.connectivity[i][j]:
                    self._derived(f"{receiver} receiving from {provider}", "flows", {"r": "dispatch result"},
                                  expression(f"at(at(at(r, 3), {i}), {j})"), "kW")

    _VARIANTS = {
        ROLE_PV: "_add_pv",
        ROLE_BESS: "_add_bess",
        ROLE_GENERATOR: "_add_generator",
        ROLE_LOAD: "_add_load",
        ROLE_BUILDING: "_add_building",
        ROLE_UTILITY: "_add_utility",
    }

    def build(self) -> Tuple[Hypergraph, InstantiationReport]:
        self._add_constants()
        self._add_simulation()
        self._add_timing()
        self._add_data()
        for actor in self.spec.actors:
            self._add_general(actor)
            getattr(self, self._VARIANTS[actor.role])(actor)
        self._add_dispatch()
        # 边引用的节点分散在各部分，全部节点就位后再加边
        for edge in self._edges:
            self._builder.add_edge(edge)
        self._builder.set_metadata("name", "microgrid")
        self._builder.set_metadata("microgrid", self.spec.to_mapping())

        graph = self._builder.build()
        report = InstantiationReport(dict(self._node_categories), dict(self._edge_categories))
        logger.info(f"微电网超图构造完成: {report.node_count} 个节点，{report.edge_count} 条边")
        return graph, report


def build_microgrid_chg(spec: GridSpec, solar_table: Optional[Table] = None,
                        building_tables: Optional[Mapping[str, Table]] = None,
                        config: Optional[EngineConfig] = None) -> Tuple[Hypergraph, InstantiationReport]:
    """由电网描述构造约束超图，并返回实例化统计"""
    return MicrogridBuilder(spec, solar_table, building_tables, config).build()


def grid_spec_of(graph: Hypergraph) -> Optional[GridSpec]:
    """从超图元数据还原电网描述"""
    mapping: Optional[Dict[str, Any]] = graph.metadata.get("microgrid")
    return None if mapping is None else GridSpec.from_mapping(mapping)
