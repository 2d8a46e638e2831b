"""
微电网物理计算 - 计时、光伏、储能、发电机与故障状态
"""
from dataclasses import dataclass
from typing import Tuple

from ..core.builtins import is_leap_year
from ..exceptions import ContractViolation

HOURS_IN_DAY = 24
DAYS_IN_YEAR = 365
SECONDS_IN_HOUR = 3600


def _non_negative(**values: float) -> None:
    for name, value in values.items():
        if value < 0:
            raise ContractViolation(f"{name} 不能为负，实际为 {value}")


def hours_in_year(year: int) -> int:
    return (DAYS_IN_YEAR + (1 if is_leap_year(year) else 0)) * HOURS_IN_DAY


# ---- 计时 ----

@dataclass(frozen=True)
class Timing:
    year: int
    day: int  # 1-366
    hour: int  # 0-23
    hour_index: int  # 1-8784
    is_leap_year: bool
    elapsed_hours: int
    num_leap_years: int  # 跨越的闰年数


def elapsed_hours(elapsed_seconds: float, seconds_in_hour: int = SECONDS_IN_HOUR) -> int:
    _non_negative(elapsed_seconds=elapsed_seconds)
    return int(elapsed_seconds // seconds_in_hour)


def timing_from_hours(hours: int, start_year: int, start_day: int, start_hour: int) -> Timing:
    """从起始日期沿日历逐年推进"""
    _non_negative(hours=hours)
    if not 1 <= start_day <= 366 or not 0 <= start_hour < HOURS_IN_DAY:
        raise ContractViolation(f"起始日期无效: 第 {start_day} 天 {start_hour} 时")
    year = start_year
    offset = (start_day - 1) * HOURS_IN_DAY + start_hour + hours
    leap_years = 0
    while offset >= hours_in_year(year):
        offset -= hours_in_year(year)
        leap_years += is_leap_year(year)
        year += 1
    return Timing(
        year=year,
        day=offset // HOURS_IN_DAY + 1,
        hour=offset % HOURS_IN_DAY,
        hour_index=offset + 1,
        is_leap_year=is_leap_year(year),
        elapsed_hours=hours,
        num_leap_years=leap_years,
    )


def timing(elapsed_seconds: float, start_year: int, start_day: int, start_hour: int) -> Timing:
    return timing_from_hours(elapsed_hours(elapsed_seconds), start_year, start_day, start_hour)


# ---- 光伏 ----

def pv_supply(sunlight: float, area: float, efficiency: float) -> float:
    """P = η·I·a / 1000，一小时内的平均千瓦数"""
    _non_negative(sunlight=sunlight, area=area, efficiency=efficiency)
    return efficiency * sunlight * area / 1000.0


# ---- 储能 ----

@dataclass(frozen=True)
class BessStep:
    new_level: float
    actual_power: float  # 放电为正，充电为负
    is_charging: bool


def bess_effective_cost(base_cost: float, scarcity_factor: float, soc: float) -> float:
    """电量越低，使用储能的代价越高"""
    return base_cost * (1.0 + scarcity_factor * (1.0 - soc))


def bess_discharge_limit(level: float, max_output: float, dt: float) -> float:
    _non_negative(level=level, max_output=max_output)
    if dt <= 0:
        raise ContractViolation(f"时间步长必须为正，实际为 {dt}")
    return min(max_output, level / dt)


def bess_charge_limit(level: float, capacity: float, max_charge_rate: float, trickle_prop: float,
                      trickle_fraction: float, charge_efficiency: float, dt: float) -> float:
    """
    当前帧最多可吸收的充电功率（kW）

    电量低于 trickle_prop·capacity 时以 trickle_fraction·max_charge_rate 涓流充电
    """
    _non_negative(level=level, capacity=capacity, max_charge_rate=max_charge_rate)
    if dt <= 0:
        raise ContractViolation(f"时间步长必须为正，实际为 {dt}")
    rate = max_charge_rate * trickle_fraction if level < trickle_prop * capacity else max_charge_rate
    if charge_efficiency <= 0:
        return 0.0
    headroom = max(0.0, capacity - level) / (charge_efficiency * dt)
    return min(rate, headroom)


def bess_step(level: float, capacity: float, commanded_power: float, charge_efficiency: float,
              max_output: float, max_charge_rate: float, dt: float) -> BessStep:
    """按指令功率推进一个时间步，电量保持在 [0, capacity]"""
    _non_negative(level=level, capacity=capacity, charge_efficiency=charge_efficiency,
                  max_output=max_output, max_charge_rate=max_charge_rate)
    if dt <= 0:
        raise ContractViolation(f"时间步长必须为正，实际为 {dt}")
    if level > capacity:
        raise ContractViolation(f"电量 {level} 超过容量 {capacity}")

    power = min(max(commanded_power, -max_charge_rate), max_output)
    if power < 0:
        charge = -power
        if charge_efficiency > 0:
            charge = min(charge, (capacity - level) / (charge_efficiency * dt))
        new_level = min(capacity, level + charge * charge_efficiency * dt)
        return BessStep(new_level, -charge, charge > 0)

    discharge = min(power, level / dt)
    return BessStep(max(0.0, level - discharge * dt), discharge, False)


# ---- 发电机 ----

@dataclass(frozen=True)
class GeneratorStep:
    new_fuel: float
    actual_power: float
    out_of_fuel: bool


def generator_available(fuel: float, max_output: float, max_consumption: float, dt: float) -> float:
    """燃料允许的最大输出功率"""
    _non_negative(fuel=fuel, max_output=max_output, max_consumption=max_consumption)
    if max_consumption == 0:
        return max_output
    return min(max_output, fuel / (max_consumption * dt) * max_output)


def generator_step(fuel: float, commanded_power: float, max_output: float, max_consumption: float,
                   dt: float, refuel_now: bool, capacity: float, tolerance: float = 1e-9) -> GeneratorStep:
    """线性油耗：consumption = max_consumption · (P / max_output) · dt"""
    _non_negative(fuel=fuel, commanded_power=commanded_power, max_output=max_output,
                  max_consumption=max_consumption, capacity=capacity)
    if dt <= 0:
        raise ContractViolation(f"时间步长必须为正，实际为 {dt}")

    power = min(commanded_power, max_output)
    consumption = max_consumption * (power / max_output) * dt if max_output > 0 else 0.0
    if consumption > fuel:
        power = power * fuel / consumption
        consumption = fuel
    new_fuel = max(0.0, fuel - consumption)
    if refuel_now:
        new_fuel = capacity
    return GeneratorStep(new_fuel, power, new_fuel <= tolerance)


def next_refuel_hour(scheduled: int, elapsed: int, refuel_today: bool, offset: int) -> int:
    """每天开始时决定当天是否补油以及补油时刻（之后 1 至 24 小时内）"""
    if elapsed % HOURS_IN_DAY != 0:
        return scheduled
    return elapsed + 1 + offset if refuel_today else -1


# ---- 故障 ----

def failure_step(failing: bool, prob_failing: float, prob_fixed: float, draw: float) -> bool:
    """两状态马尔可夫链：正常时以 prob_failing 故障，故障时以 prob_fixed 修复"""
    if failing:
        return not draw < prob_fixed
    return draw < prob_failing


def stationary_failing_fraction(prob_failing: float, prob_fixed: float) -> float:
    total = prob_failing + prob_fixed
    return prob_failing / total if total > 0 else 0.0


def soc(level: float, capacity: float) -> float:
    return level / capacity if capacity > 0 else 0.0


def clamp_unit(value: float) -> float:
    return min(1.0, max(0.0, value))


def split_flows(flows: Tuple[Tuple[float, ...], ...], index: int) -> Tuple[float, float]:
    """返回 (获得, 提供) 功率"""
    received = sum(flows[index])
    provided = sum(row[index] for row in flows)
    return received, provided
