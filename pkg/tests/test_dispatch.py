import pytest

from chg_twin.exceptions import ContractViolation
from chg_twin.microgrid.dispatch import Demand, Supply, dispatch

NAMES = ("PV", "Gen", "Utility", "Load")
LOAD_ROW = (True, True, True, False)
NO_ROW = (False, False, False, False)


def simple_supplies(failing_gen=False):
    return [
        Supply("pv", 2.0, 0.0),
        Supply("generator", 5.0, 0.30, failing=failing_gen),
        Supply("utility", 100.0, 0.15),
        Supply("load", 0.0, 0.0),
    ]


def simple_demands(normal=3.0, critical=0.0):
    return [Demand(), Demand(), Demand(), Demand(critical, normal, 1.0)]


def simple_connectivity():
    return [NO_ROW, NO_ROW, NO_ROW, LOAD_ROW]


def test_connected_prefers_utility_over_generator():
    result = dispatch(NAMES, simple_supplies(), simple_demands(), simple_connectivity(), False)
    assert result.flows[3][0] == pytest.approx(2.0)
    assert result.flows[3][2] == pytest.approx(1.0)
    assert result.flows[3][1] == 0.0
    assert result.state_vector == pytest.approx((2.0, 0.0, 1.0, -3.0))
    assert sum(result.state_vector) == pytest.approx(0.0, abs=1e-9)


def test_islanded_uses_generator():
    result = dispatch(NAMES, simple_supplies(), simple_demands(), simple_connectivity(), True)
    assert result.state_vector == pytest.approx((2.0, 1.0, 0.0, -3.0))


def test_zero_demand_without_headroom():
    result = dispatch(NAMES, simple_supplies(), simple_demands(normal=0.0), simple_connectivity(), True)
    assert result.state_vector == (0.0, 0.0, 0.0, 0.0)
    assert result.curtailed == pytest.approx(2.0)


def test_failing_source_is_skipped():
    result = dispatch(NAMES, simple_supplies(failing_gen=True), simple_demands(normal=6.0, critical=4.0),
                      simple_connectivity(), True)
    assert result.state_vector[1] == 0.0
    assert result.unmet_critical == pytest.approx(2.0)
    assert result.shed == pytest.approx(2.0)


def test_critical_demand_served_before_normal():
    names = ("A", "B", "Gen")
    supplies = [Supply("load", 0, 0), Supply("load", 0, 0), Supply("generator", 5.0, 0.3)]
    demands = [Demand(1.0, 6.0, 5.0), Demand(3.0, 3.0, 1.0), Demand()]
    connectivity = [(False, False, True), (False, False, True), (False, False, False)]
    result = dispatch(names, supplies, demands, connectivity, True)
    assert result.received(1) == pytest.approx(3.0)
    assert result.received(0) == pytest.approx(2.0)
    assert result.unmet_critical == 0.0
    assert result.shed == pytest.approx(4.0)


def test_pv_surplus_charges_bess_then_exports():
    names = ("BESS", "PV", "Utility")
    supplies = [Supply("bess", 0.0, 0.05, headroom=1.5), Supply("pv", 4.0, 0.0), Supply("utility", 100.0, 0.15)]
    demands = [Demand(), Demand(), Demand()]
    connectivity = [(False, True, False), (False, False, False), (False, True, False)]
    result = dispatch(names, supplies, demands, connectivity, False)
    assert result.flows[0][1] == pytest.approx(1.5)
    assert result.flows[2][1] == pytest.approx(2.5)
    assert result.curtailed == 0.0
    assert result.state_vector == pytest.approx((-1.5, 4.0, -2.5))


def test_failing_sink_draws_nothing():
    supplies = simple_supplies()
    supplies[3] = Supply("load", 0.0, 0.0, failing=True)
    result = dispatch(NAMES, supplies, simple_demands(), simple_connectivity(), False)
    assert result.state_vector == (0.0, 0.0, 0.0, 0.0)


def test_size_mismatch():
    with pytest.raises(ContractViolation):
        dispatch(NAMES, simple_supplies()[:3], simple_demands(), simple_connectivity(), False)


def test_value_round_trip():
    supply = Supply("bess", 1.0, 0.2, False, 3.0)
    assert Supply.from_value(("bess", 1, 0.2, False, 3)) == supply
    assert Demand.from_value((1, 2, 3)) == Demand(1.0, 2.0, 3.0)
