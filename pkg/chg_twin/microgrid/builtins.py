"""
微电网内置函数 - 把物理计算与调度注册到表达式注册表
"""
from typing import Any, Tuple

from ..core.builtins import BuiltinRegistry, require_boolean, require_int, require_numeric
from ..exceptions import TypeMismatch
from . import physics
from .dispatch import Demand, Supply, dispatch


def _numbers(name: str, *values: Any) -> Tuple[float, ...]:
    return tuple(require_numeric(value, name) for value in values)


def _timing_field(field_name: str):
    def builtin(e, y, d, h):
        for value in (e, y, d, h):
            require_int(value, f"timing_{field_name}")
        return getattr(physics.timing_from_hours(e, y, d, h), field_name)
    builtin.__doc__ = f"起始日期之后 e 小时的 {field_name}"
    return builtin


def _timing_elapsed_hours(t, s):
    """已过秒数折算为整小时数"""
    t, s = _numbers("timing_elapsed_hours", t, s)
    if s <= 0:
        raise TypeMismatch(f"每小时秒数必须为正，实际为 {s}")
    return physics.elapsed_hours(t, s)


def _pv_supply(sunlight, area, efficiency):
    """光伏输出功率 kW"""
    return physics.pv_supply(*_numbers("pv_supply", sunlight, area, efficiency))


def _bess_level(level, capacity, state, efficiency, max_output, max_charge_rate, dt):
    """按调度得到的净功率推进储能电量"""
    args = _numbers("bess_level", level, capacity, state, efficiency, max_output, max_charge_rate, dt)
    return physics.bess_step(*args).new_level


def _bess_effective_cost(base_cost, scarcity_factor, soc):
    return physics.bess_effective_cost(*_numbers("bess_effective_cost", base_cost, scarcity_factor, soc))


def _bess_discharge_limit(level, max_output, dt):
    return physics.bess_discharge_limit(*_numbers("bess_discharge_limit", level, max_output, dt))


def _bess_charge_limit(level, capacity, max_charge_rate, trickle_prop, trickle_fraction, efficiency, dt):
    args = _numbers("bess_charge_limit", level, capacity, max_charge_rate, trickle_prop,
                    trickle_fraction, efficiency, dt)
    return physics.bess_charge_limit(*args)


def _generator_fuel(fuel, state, max_output, max_consumption, dt, refuel_now, capacity, tolerance):
    """发电机燃料推进；净功率为负时按零出力处理"""
    fuel, state, max_output, max_consumption, dt, capacity, tolerance = _numbers(
        "generator_fuel", fuel, state, max_output, max_consumption, dt, capacity, tolerance
    )
    step = physics.generator_step(fuel, max(state, 0.0), max_output, max_consumption, dt,
                                  require_boolean(refuel_now, "generator_fuel"), capacity, tolerance)
    return step.new_fuel


def _generator_available(fuel, max_output, max_consumption, dt):
    return physics.generator_available(*_numbers("generator_available", fuel, max_output, max_consumption, dt))


def _refuel_schedule(call, scheduled, elapsed, probability):
    """每天零点抽样决定是否补油，补油时刻在之后 24 小时内均匀分布"""
    require_int(scheduled, "refuel_schedule")
    require_int(elapsed, "refuel_schedule")
    require_numeric(probability, "refuel_schedule")
    if elapsed % physics.HOURS_IN_DAY != 0:
        return scheduled
    refuel_today = call.stream.bernoulli(probability)
    offset = call.stream.randint(0, physics.HOURS_IN_DAY - 1) if refuel_today else 0
    return physics.next_refuel_hour(scheduled, elapsed, refuel_today, offset)


def _failure_step(call, failing, prob_failing, prob_fixed, enabled):
    """故障状态转移；不允许随机故障时状态保持不变"""
    require_boolean(failing, "failure_step")
    prob_failing, prob_fixed = _numbers("failure_step", prob_failing, prob_fixed)
    draw = call.stream.random()
    if not require_boolean(enabled, "failure_step"):
        return failing
    return physics.failure_step(failing, prob_failing, prob_fixed, draw)


def _tuple_of(value: Any, where: str) -> tuple:
    if not isinstance(value, tuple):
        raise TypeMismatch(f"{where} 需要元组，实际为 {value!r}")
    return value


def _dispatch(names, supplies, demands, connectivity, island_mode):
    """一帧调度，返回 (状态向量, 未满足关键负荷, 弃光功率, 功率流矩阵, 切除负荷)"""
    try:
        result = dispatch(
            tuple(_tuple_of(names, "dispatch")),
            [Supply.from_value(_tuple_of(s, "dispatch")) for s in _tuple_of(supplies, "dispatch")],
            [Demand.from_value(_tuple_of(d, "dispatch")) for d in _tuple_of(demands, "dispatch")],
            [_tuple_of(row, "dispatch") for row in _tuple_of(connectivity, "dispatch")],
            require_boolean(island_mode, "dispatch"),
        )
    except (TypeError, ValueError) as e:
        raise TypeMismatch(f"dispatch 输入结构错误: {e}") from e
    return result.to_value()


MICROGRID_BUILTINS = (
    ("timing_elapsed_hours", 2, _timing_elapsed_hours, False),
    ("timing_year", 4, _timing_field("year"), False),
    ("timing_day", 4, _timing_field("day"), False),
    ("timing_hour", 4, _timing_field("hour"), False),
    ("timing_hour_index", 4, _timing_field("hour_index"), False),
    ("timing_num_leap_years", 4, _timing_field("num_leap_years"), False),
    ("pv_supply", 3, _pv_supply, False),
    ("bess_level", 7, _bess_level, False),
    ("bess_effective_cost", 3, _bess_effective_cost, False),
    ("bess_discharge_limit", 3, _bess_discharge_limit, False),
    ("bess_charge_limit", 7, _bess_charge_limit, False),
    ("generator_fuel", 8, _generator_fuel, False),
    ("generator_available", 4, _generator_available, False),
    ("refuel_schedule", 3, _refuel_schedule, True),
    ("failure_step", 4, _failure_step, True),
    ("dispatch", 5, _dispatch, False),
)


def register_microgrid_builtins(registry: BuiltinRegistry) -> BuiltinRegistry:
    for name, arity, func, uses_context in MICROGRID_BUILTINS:
        registry.register_builtin(name, arity, func, uses_context=uses_context)
    return registry
