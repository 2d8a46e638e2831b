"""
贪心优先级调度 - 按成本由低到高分配电源，先保关键负荷再供普通负荷
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from ..exceptions import ContractViolation
from .actors import ROLE_BESS, ROLE_PV, ROLE_UTILITY, SINK_ROLES, SOURCE_ROLES


@dataclass(frozen=True)
class Supply:
    """一个参与者在当前帧的供给描述"""
    role: str
    available: float  # kW
    cost: float  # $/kWh
    failing: bool = False
    headroom: float = 0.0  # 储能可吸收的充电功率 kW

    @classmethod
    def from_value(cls, value: Tuple) -> "Supply":
        role, available, cost, failing, headroom = value
        return cls(role, float(available), float(cost), bool(failing), float(headroom))


@dataclass(frozen=True)
class Demand:
    critical: float = 0.0  # kW
    normal: float = 0.0  # kW，包含关键部分
    benefit: float = 0.0  # $/kWh

    @classmethod
    def from_value(cls, value: Tuple) -> "Demand":
        critical, normal, benefit = value
        return cls(float(critical), float(normal), float(benefit))


@dataclass(frozen=True)
class DispatchResult:
    """
    flows[i][j] 为参与者 i 从参与者 j 获得的功率；
    state_vector 为各参与者提供减获得的净功率
    """
    state_vector: Tuple[float, ...]
    unmet_critical: float
    curtailed: float
    flows: Tuple[Tuple[float, ...], ...]
    shed: float

    def to_value(self) -> Tuple:
        return (self.state_vector, self.unmet_critical, self.curtailed, self.flows, self.shed)

    def received(self, index: int) -> float:
        return sum(self.flows[index])

    def provided(self, index: int) -> float:
        return sum(row[index] for row in self.flows)


def _usable(supply: Supply, island_mode: bool) -> bool:
    if supply.failing or supply.role not in SOURCE_ROLES:
        return False
    return not (supply.role == ROLE_UTILITY and island_mode)


def dispatch(names: Sequence[str], supplies: Sequence[Supply], demands: Sequence[Demand],
             connectivity: Sequence[Sequence[bool]], island_mode: bool,
             tolerance: float = 1e-9) -> DispatchResult:
    """
    一帧的功率分配

    1. 负荷按收益由高到低、再按名称排序，先满足全部关键负荷，再满足普通负荷；
       每个负荷依次从已连接的可用电源中按成本（相同时按名称）取电。
    2. 光伏剩余功率先给已连接的储能充电（不超过其可吸收功率），
       再送入已连接且可用的公共电网，其余弃光。
    """
    size = len(names)
    if not (len(supplies) == len(demands) == len(connectivity) == size) or any(len(row) != size for row in connectivity):
        raise ContractViolation(f"调度输入的规模必须与参与者数 {size} 一致")

    flows: List[List[float]] = [[0.0] * size for _ in range(size)]
    remaining = [
        max(0.0, supplies[j].available) if _usable(supplies[j], island_mode) else 0.0
        for j in range(size)
    ]
    merit = sorted(
        (j for j in range(size) if _usable(supplies[j], island_mode)),
        key=lambda j: (supplies[j].cost, names[j]),
    )
    sinks = sorted(
        (i for i in range(size) if supplies[i].role in SINK_ROLES and not supplies[i].failing),
        key=lambda i: (-demands[i].benefit, names[i]),
    )

    def serve(i: int, need: float) -> float:
        for j in merit:
            if need <= tolerance:
                break
            if not connectivity[i][j] or remaining[j] <= 0:
                continue
            give = min(need, remaining[j])
            flows[i][j] += give
            remaining[j] -= give
            need -= give
        return max(0.0, need) if need > tolerance else 0.0

    unmet_critical = sum((serve(i, demands[i].critical) for i in sinks), 0.0)
    shed = sum((serve(i, max(0.0, demands[i].normal - demands[i].critical)) for i in sinks), 0.0)

    curtailed = 0.0
    headroom = [
        supplies[i].headroom if supplies[i].role == ROLE_BESS and not supplies[i].failing else 0.0
        for i in range(size)
    ]
    utilities = [
        i for i in sorted(range(size), key=lambda k: names[k])
        if supplies[i].role == ROLE_UTILITY and _usable(supplies[i], island_mode)
    ]
    for j in sorted(range(size), key=lambda k: names[k]):
        if supplies[j].role != ROLE_PV or remaining[j] <= tolerance:
            continue
        for i in sorted(range(size), key=lambda k: names[k]):
            if remaining[j] <= tolerance:
                break
            if headroom[i] > 0 and connectivity[i][j]:
                give = min(remaining[j], headroom[i])
                flows[i][j] += give
                headroom[i] -= give
                remaining[j] -= give
        for i in utilities:
            if remaining[j] > tolerance and connectivity[i][j]:
                flows[i][j] += remaining[j]
                remaining[j] = 0.0
        if remaining[j] > tolerance:
            curtailed += remaining[j]
            remaining[j] = 0.0

    state = tuple(
        sum(flows[k][i] for k in range(size)) - sum(flows[i])
        for i in range(size)
    )
    return DispatchResult(
        state_vector=state,
        unmet_critical=unmet_critical,
        curtailed=curtailed,
        flows=tuple(tuple(row) for row in flows),
        shed=shed,
    )
