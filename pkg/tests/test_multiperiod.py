import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridflow import Bus, BusType, Case, Generator, StorageUnit
from gridflow.multiperiod import (
    Profile,
    RenewableUnit,
    Scenario,
    ScenarioSet,
    TransitionMatrix,
    build_multiperiod,
    load_study,
    persistent_scenarios,
    sample_scenarios,
    solve_multiperiod,
)
from gridflow.opf import LpStatus, run_dcopf

from conftest import FIXTURES, linear_cost

STUDY = FIXTURES / "case3_usecase_mp.json"


def toy(e_max_mwh=200.0, cheap_cap=50.0):
    """One bus, a cheap and an expensive unit, 100 MW load, ideal storage."""
    return Case(
        100.0,
        (Bus(1, BusType.SLACK, pd=1.0),),
        (),
        (Generator(1, pmax=cheap_cap / 100, cost=linear_cost(10)),
         Generator(1, pmax=2.0, cost=linear_cost(100))),
        (StorageUnit(1, e_max=e_max_mwh / 100, e_initial=0.0, p_charge_max=0.8, p_discharge_max=0.8),),
    )


TOY_PROFILE = Profile((0.0, 1.0))


def test_toy_hand_optimum():
    sched = solve_multiperiod(toy(), TOY_PROFILE, horizon=2)
    assert sched.optimal
    assert abs(sched.expected_cost - 1000.0) <= 1e-7
    np.testing.assert_allclose(sched.pg[0, :, 0], [50, 50], atol=1e-7)
    np.testing.assert_allclose(sched.pg[0, :, 1], [0, 0], atol=1e-7)
    net = sched.charge[0, :, 0] - sched.discharge[0, :, 0]
    np.testing.assert_allclose(net, [50, -50], atol=1e-7)
    np.testing.assert_allclose(sched.energy[0, :, 0], [50, 0], atol=1e-7)
    assert sched.storage_residual() <= 1e-9


def test_toy_without_storage_costs_more():
    case = toy().replace(storage=())
    sched = solve_multiperiod(case, TOY_PROFILE, horizon=2)
    assert sched.expected_cost == pytest.approx(50 * 10 + 50 * 100)


def test_toy_storage_capacity_monotone():
    costs = [solve_multiperiod(toy(e), TOY_PROFILE, horizon=2).expected_cost for e in (0, 20, 200, 400)]
    assert all(b <= a + 1e-7 for a, b in zip(costs, costs[1:]))
    assert costs[1] < costs[0] and costs[2] == pytest.approx(1000.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 150), st.floats(0, 150), st.floats(10, 50))
def test_capacity_relaxation(e1, e2, cap):
    lo, hi = sorted((e1, e2))
    small = solve_multiperiod(toy(lo, cap), TOY_PROFILE, horizon=2)
    large = solve_multiperiod(toy(hi, cap), TOY_PROFILE, horizon=2)
    assert large.expected_cost <= small.expected_cost + 1e-7
    assert large.storage_residual() <= 1e-9


def test_terminal_storage_flag():
    case = toy()
    st_unit = dataclasses.replace(case.storage[0], e_initial=0.5)
    case = case.replace(storage=(st_unit,))
    held = solve_multiperiod(case, TOY_PROFILE, horizon=2)
    free = solve_multiperiod(case, TOY_PROFILE, horizon=2, terminal_storage=False)
    assert held.energy[0, -1, 0] >= 50 - 1e-9
    assert free.expected_cost < held.expected_cost
    assert free.energy[0, -1, 0] < 50


def test_single_period_reduces_to_dcopf(usecase):
    no_storage = usecase.replace(storage=())
    wind = ScenarioSet.deterministic([1.0])
    units = (RenewableUnit(2, 100.0),)
    sched = solve_multiperiod(no_storage, None, wind, 1, units)
    ref = run_dcopf(no_storage, {2: 100.0})
    assert sched.expected_cost == pytest.approx(ref.objective, abs=1e-6)
    np.testing.assert_allclose(sched.flows[0, 0], ref.flows, atol=1e-7)
    lp = build_multiperiod(usecase, None, wind, 1, units)
    names = [n.split("[")[0] for n in lp.var_names]
    assert names.count("charge") == 1 and names.count("discharge") == 1
    k = names.index("charge")
    assert lp.ub[k] == pytest.approx(0.8)


@pytest.fixture(scope="module")
def study():
    return load_study(STUDY)


def solve_study(study, wind, **kw):
    return solve_multiperiod(study.case, study.load_profile, wind, study.horizon, study.renewables, **kw)


def test_usecase_deterministic_day(study):
    sched = solve_study(study, study.forecast)
    assert sched.optimal and np.isfinite(sched.expected_cost)
    assert sched.horizon == 12
    assert sched.storage_residual() <= 1e-9
    assert sched.ramp_violation() <= 1e-9
    e = sched.energy
    assert e.min() >= -1e-9 and e.max() <= 200 + 1e-9
    rate = np.array([br.rate_a for br in study.case.branches]) * 100
    assert np.all(np.abs(sched.flows) <= rate + 1e-7)
    # generation plus wind plus storage discharge balances load in every period
    served = sched.pg.sum(axis=2) + sched.wind.sum(axis=2) + sched.discharge.sum(axis=2) - sched.charge.sum(axis=2)
    np.testing.assert_allclose(served, sched.load.sum(axis=1)[None, :], atol=1e-6)
    avail = np.array(study.forecast[0].rho) * 100
    np.testing.assert_allclose(sched.wind[0, :, 0] + sched.curtailment[0, :, 0], avail, atol=1e-7)


def test_deterministic_equals_single_scenario(study):
    tm = TransitionMatrix.identity(("forecast",), np.asarray(study.forecast[0].rho)[:, None])
    single = sample_scenarios(tm, 1, study.horizon, seed=3)
    assert len(single) == 1
    a = solve_study(study, study.forecast)
    b = solve_study(study, single)
    assert abs(a.expected_cost - b.expected_cost) <= 1e-7
    for field in ("pg", "charge", "discharge", "energy", "wind"):
        np.testing.assert_allclose(getattr(a, field), getattr(b, field), atol=1e-7)


def test_persistent_set_nonanticipative(study):
    wind = persistent_scenarios(study.transition, study.horizon, ("high", "average", "low"))
    sched = solve_study(study, wind)
    assert sched.optimal and len(sched.scenario_names) == 3
    assert sched.nonanticipativity_spread() <= 1e-9
    np.testing.assert_allclose(sched.pg[:, 0], np.broadcast_to(sched.pg[0, 0], sched.pg[:, 0].shape), atol=1e-9)
    assert sched.storage_residual() <= 1e-9 and sched.ramp_violation() <= 1e-9
    # more wind never costs more
    c = dict(zip(sched.scenario_names, sched.scenario_cost))
    assert c["high"] <= c["average"] <= c["low"]


def test_sampled_tree(study):
    wind = sample_scenarios(study.transition, 8, study.horizon, seed=11, initial=study.initial)
    sched = solve_study(study, wind)
    assert sched.optimal
    assert sched.nonanticipativity_spread() <= 1e-9
    assert sched.storage_residual() <= 1e-9
    assert sched.expected_cost == pytest.approx(float(wind.probabilities @ sched.scenario_cost), rel=1e-9)


def test_zero_probability_scenario(study):
    base = solve_study(study, study.forecast)
    rho = np.asarray(study.forecast[0].rho).copy()
    rho[1:] = 0.1  # same first period, windless afterwards
    extended = study.forecast.with_scenario(rho, 0.0, name="calm")
    assert len(extended) == 2
    again = solve_study(study, extended)
    assert abs(again.expected_cost - base.expected_cost) <= 1e-7


def test_storage_capacity_monotone_usecase(study):
    costs = []
    for e in (200.0, 400.0):
        unit = dataclasses.replace(study.case.storage[0], e_max=e / 100)
        case = study.case.replace(storage=(unit,))
        costs.append(solve_multiperiod(case, study.load_profile, study.forecast, study.horizon,
                                       study.renewables).expected_cost)
    assert costs[1] <= costs[0] + 1e-7


def test_profile_per_bus_and_errors(usecase):
    with pytest.raises(ValueError, match="horizon"):
        solve_multiperiod(usecase, Profile((1.0, 1.0)), ScenarioSet.deterministic([1.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        Profile((1.0, -1.0))
    with pytest.raises(ValueError):
        Profile(())
    with pytest.raises(ValueError, match="renewable"):
        solve_multiperiod(usecase, None, None, 2, (RenewableUnit(2, 100.0),))
    with pytest.raises(KeyError):
        solve_multiperiod(usecase, {9: Profile((1.0,))}, None, 1)


def test_dispatchable_load_follows_profile(usecase):
    no_storage = usecase.replace(storage=())
    sched = solve_multiperiod(no_storage, Profile((0.5, 1.0)), None, 2)
    assert sched.pg[0, 0, 3] >= -225 - 1e-7
    assert sched.pg[0, 1, 3] == pytest.approx(-450, abs=1e-7)


def test_outputs(study):
    sched = solve_study(study, persistent_scenarios(study.transition, study.horizon))
    rows = list(sched.to_rows())
    assert rows[0][:4] == ("low", 1, "gen1", "pg_mw")
    csv_text = sched.to_csv()
    assert csv_text.splitlines()[0] == "scenario,period,device,quantity,value"
    assert len(csv_text.splitlines()) == len(rows) + 1
    d = sched.to_dict()
    assert d["status"] == "optimal" and d["horizon"] == 12
    assert sum(s["probability"] for s in d["scenarios"]) == pytest.approx(1.0)


def test_infeasible_status_propagates():
    case = toy(cheap_cap=50).replace(generators=(Generator(1, pmax=0.1, cost=linear_cost(10)),), storage=())
    sched = solve_multiperiod(case, None, None, 2)
    assert sched.status is LpStatus.INFEASIBLE and not sched.optimal
