import cmath
import io

import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings
from hypothesis import strategies as st

from gridflow import Branch, Bus, BusType, Case, build_system_matrices, bus_injections, load_case
from gridflow.admittance import ZeroImpedanceError, branch_admittance, incidence_matrix, write_matrix_market
from gridflow.powerflow import solve

from conftest import CORPUS, FIXTURES, SERIES_CASES, random_network, two_bus


def y_series(r, x):
    # conjugate over squared magnitude, written out rather than 1/z
    return complex(r, -x) / (r * r + x * x)


def test_pure_reactance():
    y = branch_admittance(Branch(1, 2, r=0.0, x=1.0))
    assert abs(y.yff - (-1j)) <= 1e-12 and abs(y.ytt - (-1j)) <= 1e-12
    assert abs(y.yft - 1j) <= 1e-12 and abs(y.ytf - 1j) <= 1e-12


def test_lossy_line_with_charging():
    y = branch_admittance(Branch(1, 2, r=0.01, x=0.1, b=0.02))
    ys = y_series(0.01, 0.1)
    assert abs(y.yff - (ys + 0.01j)) <= 1e-12
    assert abs(y.ytt - (ys + 0.01j)) <= 1e-12
    assert abs(y.yft + ys) <= 1e-12 and abs(y.ytf + ys) <= 1e-12
    assert y.yff == pytest.approx(0.990099 - 9.890990j, abs=1e-6)
    assert y.yft == pytest.approx(-0.990099 + 9.900990j, abs=1e-6)


def test_phase_shifter():
    y = branch_admittance(Branch(1, 2, x=0.1, shift=np.radians(30)))
    assert abs(y.yff + 10j) <= 1e-12 and abs(y.ytt + 10j) <= 1e-12
    assert abs(y.yft - cmath.rect(10, np.radians(120))) <= 1e-12
    assert abs(y.ytf - cmath.rect(10, np.radians(60))) <= 1e-12
    assert y.yft == pytest.approx(-5 + 8.66025j, abs=1e-5)
    assert y.yft != y.ytf


@settings(max_examples=200)
@given(st.floats(0, 0.1), st.floats(0.01, 1.0), st.floats(0, 0.5), st.floats(0.8, 1.2),
       st.one_of(st.just(0.0), st.floats(1e-6, 0.5), st.floats(-0.5, -1e-6)))
def test_asymmetry_iff_shift(r, x, b, tap, shift):
    y = branch_admittance(Branch(1, 2, r=r, x=x, b=b, tap=tap, shift=shift))
    ys = y_series(r, x)
    assert abs(y.yff - (ys + 0.5j * b) / tap**2) <= 1e-12 * max(1, abs(y.yff))
    assert abs(y.yft - (-ys / (tap * cmath.exp(-1j * shift)))) <= 1e-12 * abs(ys)
    if shift == 0.0:
        assert y.yft == y.ytf
    else:
        assert abs(y.yft - y.ytf) > 1e-7 * abs(ys)


def test_zero_impedance_rejected():
    with pytest.raises(ZeroImpedanceError):
        branch_admittance(Branch(1, 2))


def test_tap_zero_means_unity():
    a = branch_admittance(Branch(1, 2, r=0.01, x=0.1, tap=0.0))
    b = branch_admittance(Branch(1, 2, r=0.01, x=0.1, tap=1.0))
    assert a == b


def test_two_bus_ybus():
    ybus = build_system_matrices(two_bus(x=0.1)).ybus.toarray()
    np.testing.assert_allclose(ybus, [[-10j, 10j], [10j, -10j]], atol=1e-12)


def test_usecase_row_sums_vanish(usecase):
    ybus = build_system_matrices(usecase).ybus
    assert np.abs(np.asarray(ybus.sum(axis=1))).max() <= 1e-12
    np.testing.assert_allclose(bus_injections(ybus, np.ones(3)), 0, atol=1e-12)


def incidence_oracle(case):
    """Dense A (+1 from, -1 to) and D = diag(y_s), built without the library."""
    pos = {b.id: k for k, b in enumerate(case.buses)}
    on = [br for br in case.branches if br.status]
    a = np.zeros((len(on), case.n_bus))
    d = np.zeros(len(on), dtype=complex)
    for l, br in enumerate(on):
        a[l, pos[br.from_bus]] = 1.0
        a[l, pos[br.to_bus]] = -1.0
        d[l] = y_series(br.r, br.x)
    return a, d


@pytest.mark.parametrize("name", SERIES_CASES)
def test_ybus_equals_incidence_product(name):
    case = load_case(FIXTURES / name)
    assert not np.any(case.gs) and not np.any(case.bs)
    assert all(br.tap == 1 and br.shift == 0 and br.b == 0 for br in case.branches)
    a, d = incidence_oracle(case)
    expect = a.T @ np.diag(d) @ a
    got = build_system_matrices(case).ybus.toarray()
    assert np.abs(got - expect).max() <= 1e-13


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 25), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_incidence_identity_random(n_bus, extra, seed):
    case = random_network(np.random.default_rng(seed), n_bus, extra)
    a, d = incidence_oracle(case)
    got = build_system_matrices(case).ybus.toarray()
    assert np.abs(got - a.T @ np.diag(d) @ a).max() <= 1e-13 * max(1.0, np.abs(d).max())
    a_lib = incidence_matrix(case).toarray()
    np.testing.assert_array_equal(a_lib, a)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 25), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_symmetric_without_shifts(n_bus, extra, seed):
    case = random_network(np.random.default_rng(seed), n_bus, extra, shunts=True)
    ybus = build_system_matrices(case).ybus
    assert (ybus != ybus.T).nnz == 0


def test_shift_breaks_symmetry():
    case = load_case(FIXTURES / "case6_xfmr.m")
    ybus = build_system_matrices(case).ybus
    assert any(br.shift for br in case.branches)
    assert (ybus != ybus.T).nnz > 0


def test_yf_yt_rows():
    case = load_case(FIXTURES / "case6_xfmr.m")
    m = build_system_matrices(case)
    for l, br in enumerate(case.branches):
        y = branch_admittance(br)
        f, t = case.index[br.from_bus], case.index[br.to_bus]
        assert m.yf[l, f] == pytest.approx(y.yff) and m.yf[l, t] == pytest.approx(y.yft)
        assert m.yt[l, f] == pytest.approx(y.ytf) and m.yt[l, t] == pytest.approx(y.ytt)


def test_no_explicit_zeros_and_duplicates_summed():
    case = Case(100.0, (Bus(1, BusType.SLACK), Bus(2)), (Branch(1, 2, x=0.2), Branch(1, 2, x=0.2)))
    ybus = build_system_matrices(case).ybus
    assert ybus.nnz == 4 and np.all(ybus.data != 0)
    assert ybus[0, 1] == pytest.approx(10j)


def test_open_branch_changes_four_entries():
    case = load_case(FIXTURES / "case9.m")
    before = build_system_matrices(case).ybus.toarray()
    branches = list(case.branches)
    branches[3] = Branch(**{**branches[3].__dict__, "status": False})
    after = build_system_matrices(case.replace(branches=tuple(branches))).ybus.toarray()
    assert np.count_nonzero(before != after) == 4


def test_open_parallel_branch_keeps_pattern():
    case = Case(100.0, (Bus(1, BusType.SLACK), Bus(2)),
                (Branch(1, 2, x=0.2), Branch(1, 2, x=0.2, status=False)))
    m = build_system_matrices(case)
    assert m.ybus.nnz == 4 and m.ybus[0, 1] == pytest.approx(5j)
    assert m.yf[1].nnz == 0 and m.yt[1].nnz == 0


def test_injection_examples():
    ybus = build_system_matrices(two_bus(x=0.1)).ybus
    v = np.array([1.0, cmath.rect(1.0, -0.1)])
    s = bus_injections(ybus, v)
    # direct evaluation: S0 = V0 * conj(y (V0 - V1))
    y = -10j
    expect0 = v[0] * np.conj(y * (v[0] - v[1]))
    assert abs(s[0] - expect0) <= 1e-12
    assert s[0] == pytest.approx(0.99833 + 0.04996j, abs=1e-5)
    shunt = Case(100.0, (Bus(1, BusType.SLACK, bs=0.05),))
    assert bus_injections(build_system_matrices(shunt).ybus, [1.0])[0] == pytest.approx(-0.05j)
    with pytest.raises(ValueError):
        bus_injections(ybus, np.ones(3))


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_two_evaluation_orders_agree(path):
    case = load_case(path)
    sol = solve(case)
    ybus = build_system_matrices(case).ybus
    v = sol.v
    s = bus_injections(ybus, v)
    other = np.conj(v) * (ybus @ v)
    assert np.abs(np.conj(s) - other).max() <= 1e-12 * max(1.0, np.abs(s).max())


def test_matrix_market_dump():
    ybus = build_system_matrices(load_case(FIXTURES / "case6_xfmr.m")).ybus
    buf = io.BytesIO()
    write_matrix_market(ybus, buf)
    text = buf.getvalue().decode()
    assert text.startswith("%%MatrixMarket matrix coordinate complex")
    back = scipy.io.mmread(io.BytesIO(buf.getvalue()))
    assert np.abs(back.toarray() - ybus.toarray()).max() <= 1e-12


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 5), st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), st.floats(0.01, 1.0),
                                             st.floats(0, 0.1), st.floats(0, 0.2)), min_size=1, max_size=12))
def test_symmetric_with_reversed_parallel_branches(n_bus, specs):
    branches = tuple(Branch(f % n_bus + 1, t % n_bus + 1, r=r, x=x, b=b)
                     for f, t, x, r, b in specs if f % n_bus != t % n_bus)
    case = Case(100.0, tuple(Bus(k + 1, BusType.SLACK if k == 0 else BusType.PQ) for k in range(n_bus)), branches)
    ybus = build_system_matrices(case).ybus
    assert (ybus != ybus.T).nnz == 0
