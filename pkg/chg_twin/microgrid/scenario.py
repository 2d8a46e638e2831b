"""
场景运行 - 按帧推进微电网超图并整理为逐时电网状态
"""
from dataclasses import dataclass
from typing import Any, List, Mapping, Optional, Tuple

from ..config import EngineConfig
from ..core.factory import ComponentFactory
from ..core.hypergraph import Hypergraph
from ..core.solver import FrameRun, HyperpathSolver
from ..core.tables import Column, Table
from ..exceptions import UsageError
from ..services.plot_service import plot_lines
from ..utils.decorators import operation_handler
from ..utils.logger import logger
from .actors import ROLE_BESS, ROLE_GENERATOR, GridSpec
from .builder import InstantiationReport, build_microgrid_chg
from .dispatch import Demand, Supply


@dataclass(frozen=True)
class GridState:
    """一帧的电网状态；按参与者顺序排列的字段与 GridSpec.actors 对齐"""
    iteration: int
    hour: int
    state_vector: Tuple[float, ...]
    failing: Tuple[bool, ...]
    supplies: Tuple[Supply, ...]
    demands: Tuple[Demand, ...]
    flows: Tuple[Tuple[float, ...], ...]
    soc: Mapping[str, float]
    fuel: Mapping[str, float]
    refuel_now: Mapping[str, bool]
    unmet_critical: float
    curtailed: float
    shed: float

    @property
    def balance(self) -> float:
        return sum(self.state_vector)

    def received(self, index: int) -> float:
        return sum(self.flows[index])

    def provided(self, index: int) -> float:
        return sum(row[index] for row in self.flows)


def _read_state(run: FrameRun, spec: GridSpec, k: int) -> GridState:
    names = spec.names
    result = run.value("dispatch result", k)
    return GridState(
        iteration=k,
        hour=run.value("elapsed hours", k),
        state_vector=tuple(result[0]),
        failing=tuple(run.value(f"is failing {name}", k) for name in names),
        supplies=tuple(Supply.from_value(s) for s in run.value("supply tuples", k)),
        demands=tuple(Demand.from_value(d) for d in run.value("demand tuples", k)),
        flows=tuple(tuple(row) for row in result[3]),
        soc={a.name: run.value(f"soc {a.name}", k) for a in spec.of_role(ROLE_BESS)},
        fuel={a.name: run.value(f"fuel level {a.name}", k) for a in spec.of_role(ROLE_GENERATOR)},
        refuel_now={a.name: run.value(f"refuel now {a.name}", k) for a in spec.of_role(ROLE_GENERATOR)},
        unmet_critical=result[1],
        curtailed=result[2],
        shed=result[4],
    )


@dataclass(frozen=True)
class ScenarioResult:
    spec: GridSpec
    graph: Hypergraph
    report: InstantiationReport
    states: Tuple[GridState, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.states)

    def power_series(self, name: str) -> List[Tuple[int, float]]:
        index = self.spec.index_of(name)
        return [(state.hour, state.state_vector[index]) for state in self.states]

    def to_table(self, name: str = "scenario") -> Table:
        """逐时输出：小时、各参与者净功率、储能 SOC、发电机油量、故障标志"""
        names = self.spec.names
        bess = [a.name for a in self.spec.of_role(ROLE_BESS)]
        generators = [a.name for a in self.spec.of_role(ROLE_GENERATOR)]
        columns = [Column("hour", "integer")]
        columns += [Column(f"{n} kW", "real") for n in names]
        columns += [Column(f"{n} soc", "real") for n in bess]
        columns += [Column(f"{n} fuel", "real") for n in generators]
        columns += [Column(f"{n} failing", "boolean") for n in names]
        columns += [Column("unmet critical kW", "real")]

        rows = []
        for state in self.states:
            row: List[Any] = [state.hour]
            row += [float(v) for v in state.state_vector]
            row += [float(state.soc[n]) for n in bess]
            row += [float(state.fuel[n]) for n in generators]
            row += list(state.failing)
            row.append(float(state.unmet_critical))
            rows.append(tuple(row))
        return Table(name, tuple(columns), tuple(rows))

    def plot(self, path: str, config: Optional[EngineConfig] = None, title: str = "") -> None:
        """各参与者净功率随时间变化的叠加折线图"""
        config = config or EngineConfig.create_default()
        series = {name: self.power_series(name) for name in self.spec.names}
        mode = "islanded" if self.spec.island_mode else "connected"
        plot_lines(path, series, title=title or f"microgrid ({mode})", xlabel="hour", ylabel="kW",
                   config=config.plot)


@operation_handler("微电网场景运行")
def run_scenario(spec: GridSpec, hours: int, seed: int = 0, config: Optional[EngineConfig] = None,
                 solar_table: Optional[Table] = None, building_tables: Optional[Mapping[str, Table]] = None,
                 registry=None) -> ScenarioResult:
    """
    构造微电网超图并在 [0, hours) 帧内运行

    Args:
        spec: 电网描述
        hours: 帧数（每帧 spec.time_step 秒）
        seed: 随机种子
        solar_table / building_tables: 替换合成数据的实测数据表
    """
    if hours < 1:
        raise UsageError(f"小时数必须不小于 1，实际为 {hours}")
    config = config or EngineConfig.create_default()
    graph, report = build_microgrid_chg(spec, solar_table, building_tables, config)
    solver_config = ComponentFactory.create_solver_config(config, rng_seed=seed)
    solver = HyperpathSolver(graph, None, solver_config, registry or ComponentFactory.create_registry())
    run = solver.run_frames(hours)
    states = tuple(_read_state(run, spec, k) for k in range(hours))
    logger.debug(f"场景运行完成: {hours} 帧，求值 {run.firings} 次")
    return ScenarioResult(spec, graph, report, states, seed)

