"""Acceptance suite: one check per criterion, each within its time budget.

Run with ``pytest tests/test_acceptance.py -s`` (the summary lines are printed
even without ``-s``).
"""
import dataclasses
import math
import time

import numpy as np
import pytest

from gridflow import Branch, build_system_matrices, load_case, parse_case, serialize_case
from gridflow.admittance import branch_admittance
from gridflow.caseio import CaseParseError
from gridflow.multiperiod import (
    TransitionMatrix,
    enumerate_paths,
    load_study,
    persistent_scenarios,
    sample_paths,
    sample_scenarios,
    solve_multiperiod,
)
from gridflow.opf import run_dcopf
from gridflow.powerflow import solve, solve_dc

from conftest import CORPUS, FIXTURES, MALFORMED, SERIES_CASES
from test_admittance import incidence_oracle, y_series
from test_caseio import assert_same_case
from test_dcopf import brute_force
from test_multiperiod import STUDY, TOY_PROFILE, toy
from test_powerflow import max_rel_dev


@pytest.fixture(scope="module", autouse=True)
def warm_kernels():
    # compile the accelerated kernels once so budgets measure solving, not JIT
    case = load_case(FIXTURES / "case3_usecase.m")
    for method in ("newton", "gs", "fdlf"):
        solve(case, method=method)
    run_dcopf(case, {2: 100.0})
    sample_paths(TransitionMatrix.uniform(("a", "b"), [0, 1]), 2, 2, seed=0)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, elapsed=None, budget=None):
        in_time = budget is None or elapsed < budget
        passed = bool(ok) and in_time
        timing = f" [{elapsed:.2f} s / {budget:g} s]" if budget is not None else ""
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if passed else 'FAIL'} {detail}{timing}")
        assert ok, detail
        assert in_time, f"criterion {number} took {elapsed:.2f} s, budget {budget} s"
    return emit


def test_criterion_1_branch_admittance(report):
    t0 = time.perf_counter()
    err = 0.0
    y = branch_admittance(Branch(1, 2, x=1.0))
    err = max(err, abs(y.yff + 1j), abs(y.ytt + 1j), abs(y.yft - 1j), abs(y.ytf - 1j))
    ys = y_series(0.01, 0.1)
    y = branch_admittance(Branch(1, 2, r=0.01, x=0.1, b=0.02))
    err = max(err, abs(y.yff - (ys + 0.01j)), abs(y.ytt - (ys + 0.01j)), abs(y.yft + ys), abs(y.ytf + ys))
    y = branch_admittance(Branch(1, 2, x=0.1, shift=math.radians(30)))
    rot = complex(math.cos(math.radians(30)), math.sin(math.radians(30)))
    err = max(err, abs(y.yff + 10j), abs(y.ytt + 10j), abs(y.yft - 10j / rot.conjugate()), abs(y.ytf - 10j / rot))
    rng = np.random.default_rng(1)
    iff = True
    for _ in range(500):
        shift = 0.0 if rng.random() < 0.5 else rng.uniform(1e-6, math.pi) * rng.choice([-1, 1])
        br = Branch(1, 2, r=rng.uniform(0, 0.05), x=rng.uniform(0.01, 0.5), b=rng.uniform(0, 0.1),
                    tap=rng.uniform(0.9, 1.1), shift=shift)
        y = branch_admittance(br)
        iff &= (y.yft != y.ytf) == (shift != 0.0)
    elapsed = time.perf_counter() - t0
    report(1, err <= 1e-12 and iff, f"max example error {err:.1e}, asymmetry iff shift: {iff}", elapsed, 1)


def test_criterion_2_ybus_incidence(report):
    t0 = time.perf_counter()
    worst = 0.0
    for name in SERIES_CASES:
        case = load_case(FIXTURES / name)
        a, d = incidence_oracle(case)
        worst = max(worst, float(np.abs(build_system_matrices(case).ybus.toarray() - a.T @ np.diag(d) @ a).max()))
    elapsed = time.perf_counter() - t0
    ok = len(SERIES_CASES) >= 5 and worst <= 1e-13
    report(2, ok, f"{len(SERIES_CASES)} cases, max |Ybus - A'DA| {worst:.1e}", elapsed, 1)


def test_criterion_3_jacobian(report):
    t0 = time.perf_counter()
    case = load_case(FIXTURES / "case3_usecase.m")
    n = case.n_bus
    devs = [max_rel_dev(case, np.ones(n), np.zeros(n))]
    rng = np.random.default_rng(3)
    for _ in range(2):
        devs.append(max_rel_dev(case, 1 + 0.05 * rng.standard_normal(n), 0.1 * rng.standard_normal(n)))
    elapsed = time.perf_counter() - t0
    report(3, max(devs) <= 1e-6, f"max relative deviation {max(devs):.1e} over 3 states", elapsed, 1)


def test_criterion_4_ac_cross_validation(report):
    t0 = time.perf_counter()
    diff, iters, mism, balance = 0.0, 0, 0.0, 0.0
    for path in CORPUS:
        case = load_case(path)
        nr = solve(case, method="newton")
        assert nr.converged, path.name
        iters, mism = max(iters, nr.iterations), max(mism, nr.mismatch)
        shunt = (case.gs * nr.vm**2).sum()
        balance = max(balance, abs(nr.pg.sum() - case.pd.sum() - shunt - nr.losses.sum()))
        for method in ("gs", "fdlf"):
            other = solve(case, method=method, tol=1e-10)
            assert other.converged, (path.name, method)
            diff = max(diff, np.abs(other.vm - nr.vm).max(), np.abs(other.va - nr.va).max())
    elapsed = time.perf_counter() - t0
    ok = diff <= 1e-6 and iters <= 10 and mism <= 1e-8 and balance <= 1e-7
    report(4, ok, f"{len(CORPUS)} cases, method spread {diff:.1e}, Newton <= {iters} iterations, "
                  f"mismatch {mism:.1e}, balance {balance:.1e}", elapsed, 5)


def test_criterion_5_dcopf_oracle(report):
    t0 = time.perf_counter()
    case = load_case(FIXTURES / "case3_usecase.m")
    res = run_dcopf(case, {2: 100.0})
    best, arg = brute_force(case, 100.0)
    # re-verify flows by a DC power flow at the optimal dispatch
    gens = tuple(dataclasses.replace(g, pg=float(p) / case.base_mva) for g, p in zip(case.generators, res.pg))
    check = solve_dc(case.replace(generators=gens).with_bus_injection(2, 1.0))
    flows = check.sf.real * case.base_mva
    rate = np.array([br.rate_a for br in case.branches]) * case.base_mva
    within = (np.all(np.abs(flows) <= rate + 1e-6)
              and all(g.pmin * 100 - 1e-7 <= p <= g.pmax * 100 + 1e-7 for g, p in zip(case.generators, res.pg)))
    elapsed = time.perf_counter() - t0
    gap = abs(res.objective - best)
    ok = res.optimal and gap <= 1.0 and within and np.allclose(flows, res.flows, atol=1e-6)
    report(5, ok, f"LP {res.objective:.2f} $/h vs brute force {best:.2f} $/h at {arg}, gap {gap:.2e}, "
                  f"limits hold under DC re-solve: {within}", elapsed, 30)


def test_criterion_6_multiperiod(report):
    t0 = time.perf_counter()
    sched = solve_multiperiod(toy(), TOY_PROFILE, horizon=2)
    toy_err = max(abs(sched.expected_cost - 1000.0),
                  float(np.abs(sched.pg[0, :, 0] - 50).max()),
                  float(np.abs(sched.charge[0, :, 0] - sched.discharge[0, :, 0] - [50, -50]).max()))
    study = load_study(STUDY)

    def run(wind, case=None):
        return solve_multiperiod(case or study.case, study.load_profile, wind, study.horizon, study.renewables)

    persistent = run(persistent_scenarios(study.transition, study.horizon))
    spread, residual = persistent.nonanticipativity_spread(), persistent.storage_residual()
    costs = []
    for e in (100.0, 150.0, 200.0, 300.0, 400.0):  # all hold the 100 MWh initial charge
        unit = dataclasses.replace(study.case.storage[0], e_max=e / 100)
        costs.append(run(study.forecast, study.case.replace(storage=(unit,))).expected_cost)
    monotone = all(b <= a + 1e-7 for a, b in zip(costs, costs[1:]))
    tm = TransitionMatrix.identity(("forecast",), np.asarray(study.forecast[0].rho)[:, None])
    identity_gap = abs(run(study.forecast).expected_cost - run(sample_scenarios(tm, 1, study.horizon)).expected_cost)
    elapsed = time.perf_counter() - t0
    ok = toy_err <= 1e-7 and spread <= 1e-9 and residual <= 1e-9 and monotone and identity_gap <= 1e-7
    report(6, ok, f"toy error {toy_err:.1e}, spread {spread:.1e}, storage residual {residual:.1e}, "
                  f"cost monotone in e_max: {monotone}, deterministic vs single scenario {identity_gap:.1e}",
           elapsed, 10)


def test_criterion_7_sampling(report):
    t0 = time.perf_counter()
    states, values = ("low", "average", "high"), [0.45, 0.9, 1.0]
    persist = sample_paths(TransitionMatrix.identity(states, values), 200, 12, seed=7)
    constant = bool(np.all(persist == persist[:, :1]))
    counts = np.bincount(sample_paths(TransitionMatrix.uniform(states, values), 3000, 1, seed=2024)[:, 0],
                         minlength=3)
    freq_err = float(np.abs(counts / 3000 - 1 / 3).max())
    _, probs = enumerate_paths(TransitionMatrix.uniform(states, values), 2)
    total = math.fsum(probs)
    elapsed = time.perf_counter() - t0
    report(7, constant and freq_err <= 0.05 and total == 1.0,
           f"identity paths constant: {constant}, max frequency error {freq_err:.3f}, "
           f"enumerated mass {total!r}", elapsed, 5)


def test_criterion_8_parser_corpus(report):
    t0 = time.perf_counter()
    trips = 0
    for path in CORPUS:
        case = load_case(path)
        for fmt in ("matrix", "json"):
            text = serialize_case(case, fmt)
            again = parse_case(text, fmt)
            assert_same_case(case, again)
            assert serialize_case(again, fmt) == text
            trips += 1
    malformed = sorted(MALFORMED.iterdir())
    located = 0
    for path in malformed:
        try:
            load_case(path)
        except CaseParseError as exc:
            located += exc.line is not None
    elapsed = time.perf_counter() - t0
    has_usecase = any(p.name == "case3_usecase.m" for p in CORPUS)
    ok = len(CORPUS) >= 10 and has_usecase and located == len(malformed)
    report(8, ok, f"{len(CORPUS)} fixtures round-trip in {trips} format passes, "
                  f"{located}/{len(malformed)} malformed inputs located", elapsed, 1)


def test_criterion_9_reference_table_not_ground_truth(report):
    case = load_case(FIXTURES / "case3_usecase.m")
    bus1_caps = [g.pmax * case.base_mva for g in case.generators if g.bus == 1]
    # the reference dispatch table lists 575 MW from one bus-1 unit; no feasible dispatch can do that
    conflict = all(575 > cap for cap in bus1_caps)
    res = run_dcopf(case, {2: 100.0})
    within = all(p <= cap + 1e-7 for p, cap in zip(res.pg[:2], bus1_caps))
    report(9, conflict and within,
           "reference dispatch table exceeds the 200 MW unit limits and the figures carry no tabulated "
           "values, so neither is used as numeric ground truth; the brute-force and hand-derived oracles "
           "of criteria 5 and 6 stand in")
