import pytest

from chg_twin.core.hypergraph import Hyperedge, Hypergraph, Node
from chg_twin.core.relations import builtin
from chg_twin.core.solver import SolverConfig, solve_series
from chg_twin.exceptions import ContractViolation
from chg_twin.microgrid import physics
from chg_twin.utils.rng import KeyedStream


@pytest.mark.parametrize("sunlight,area,efficiency,expected", [
    (1000.0, 10.0, 0.2, 2.0),
    (500.0, 20.0, 0.15, 1.5),
    (0.0, 10.0, 0.2, 0.0),
])
def test_pv_supply(sunlight, area, efficiency, expected):
    assert physics.pv_supply(sunlight, area, efficiency) == pytest.approx(expected)


def test_pv_supply_rejects_negative_input():
    with pytest.raises(ContractViolation):
        physics.pv_supply(-1.0, 10.0, 0.2)


class TestBess:
    def test_charging(self):
        step = physics.bess_step(5.0, 10.0, -2.0, 0.9, 5.0, 5.0, 1.0)
        assert step.new_level == pytest.approx(6.8)
        assert step.actual_power == pytest.approx(-2.0)
        assert step.is_charging

    def test_discharging(self):
        step = physics.bess_step(5.0, 10.0, 2.0, 0.9, 5.0, 5.0, 1.0)
        assert step.new_level == pytest.approx(3.0)
        assert step.actual_power == pytest.approx(2.0)
        assert not step.is_charging

    def test_full_battery_absorbs_nothing(self):
        step = physics.bess_step(10.0, 10.0, -2.0, 0.9, 5.0, 5.0, 1.0)
        assert step.new_level == 10.0
        assert step.actual_power == 0
        assert not step.is_charging

    def test_discharge_limited_by_level(self):
        step = physics.bess_step(1.0, 10.0, 4.0, 0.9, 5.0, 5.0, 1.0)
        assert step.new_level == 0.0
        assert step.actual_power == pytest.approx(1.0)

    def test_level_above_capacity(self):
        with pytest.raises(ContractViolation):
            physics.bess_step(11.0, 10.0, 0.0, 0.9, 5.0, 5.0, 1.0)

    def test_trickle_charge_below_threshold(self):
        assert physics.bess_charge_limit(1.0, 20.0, 5.0, 0.2, 0.1, 0.9, 1.0) == pytest.approx(0.5)
        assert physics.bess_charge_limit(10.0, 20.0, 5.0, 0.2, 0.1, 0.9, 1.0) == pytest.approx(5.0)
        assert physics.bess_charge_limit(20.0, 20.0, 5.0, 0.2, 0.1, 0.9, 1.0) == 0.0

    def test_effective_cost_rises_as_charge_falls(self):
        assert physics.bess_effective_cost(0.05, 1.0, 1.0) == pytest.approx(0.05)
        assert physics.bess_effective_cost(0.05, 1.0, 0.0) == pytest.approx(0.10)


class TestGenerator:
    def test_linear_consumption(self):
        step = physics.generator_step(100.0, 5.0, 10.0, 10.0, 1.0, False, 200.0)
        assert step.new_fuel == pytest.approx(95.0)
        assert step.actual_power == pytest.approx(5.0)
        assert not step.out_of_fuel

    def test_empty_tank(self):
        step = physics.generator_step(0.0, 5.0, 10.0, 10.0, 1.0, False, 200.0)
        assert step.actual_power == 0.0
        assert step.out_of_fuel

    def test_refuel(self):
        step = physics.generator_step(10.0, 5.0, 10.0, 10.0, 1.0, True, 200.0)
        assert step.new_fuel == 200.0

    def test_available_power_limited_by_fuel(self):
        assert physics.generator_available(100.0, 10.0, 10.0, 1.0) == 10.0
        assert physics.generator_available(2.0, 10.0, 10.0, 1.0) == pytest.approx(2.0)

    def test_refuel_schedule_only_changes_at_day_start(self):
        assert physics.next_refuel_hour(7, 5, True, 3) == 7
        assert physics.next_refuel_hour(7, 24, True, 3) == 28
        assert physics.next_refuel_hour(7, 24, False, 3) == -1


class TestTiming:
    def test_start_of_leap_year(self):
        t = physics.timing(0, 2004, 1, 0)
        assert (t.year, t.day, t.hour, t.hour_index) == (2004, 1, 0, 1)
        assert t.is_leap_year

    def test_rolls_into_next_year(self):
        t = physics.timing(3600, 2003, 365, 23)
        assert (t.year, t.day, t.hour, t.hour_index) == (2004, 1, 0, 1)
        assert t.elapsed_hours == 1

    def test_leap_day_exists(self):
        t = physics.timing_from_hours(59 * 24, 2004, 1, 0)
        assert (t.day, t.hour_index) == (60, 59 * 24 + 1)

    def test_counts_crossed_leap_years(self):
        t = physics.timing_from_hours(physics.hours_in_year(2004), 2004, 1, 0)
        assert t.year == 2005
        assert t.num_leap_years == 1

    def test_invalid_start(self):
        with pytest.raises(ContractViolation):
            physics.timing_from_hours(0, 2004, 0, 0)


class TestFailure:
    def test_transitions(self):
        assert physics.failure_step(False, 0.1, 0.5, 0.05)
        assert not physics.failure_step(False, 0.1, 0.5, 0.5)
        assert not physics.failure_step(True, 0.1, 0.5, 0.2)
        assert physics.failure_step(True, 0.1, 0.5, 0.7)

    def test_long_run_fraction(self):
        failing = False
        failing_steps = 0
        steps = 5000
        for k in range(steps):
            draw = KeyedStream(17, "is failing X", k).random()
            failing = physics.failure_step(failing, 0.1, 0.5, draw)
            failing_steps += failing
        expected = physics.stationary_failing_fraction(0.1, 0.5)
        assert expected == pytest.approx(1 / 6)
        assert abs(failing_steps / steps - expected) <= 0.05


def test_failure_chain_settles_at_stationary_fraction(registry):
    graph = Hypergraph.from_parts(
        [
            Node("is failing X", initial=False),
            Node("prob failing X", initial=0.1),
            Node("prob fixed X", initial=0.5),
            Node("has random failure", initial=True),
        ],
        [
            Hyperedge(
                "is failing X step",
                {"f": "is failing X", "p": "prob failing X", "q": "prob fixed X", "r": "has random failure"},
                "is failing X",
                builtin("failure_step", "f", "p", "q", "r"),
                advances=True,
            ),
        ],
    )
    frames = 5000
    series = solve_series(graph, "is failing X", config=SolverConfig(rng_seed=17), frames=frames, registry=registry)
    fraction = sum(1 for _, failing in series if failing) / frames
    assert abs(fraction - physics.stationary_failing_fraction(0.1, 0.5)) <= 0.05
