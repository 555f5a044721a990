import dataclasses
import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest
import scipy.io

from gridflow import load_case
from gridflow.admittance import build_system_matrices
from gridflow.caseio import save_case
from gridflow.cli import load_schema, run
from gridflow.opf import run_dcopf
from gridflow.powerflow import Method, PowerFlowOptions, solve

from conftest import FIXTURES

CASE = str(FIXTURES / "case3_usecase")
STUDY = str(FIXTURES / "case3_usecase_mp.json")


def call(*argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err, io.StringIO(stdin))
    return code, out.getvalue(), err.getvalue()


def call_json(*argv, kind=None):
    code, out, err = call(*argv, "--output", "json")
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema(kind or argv[0]))
    return doc


def test_pf_matches_library():
    doc = call_json("pf", CASE, "--method", "newton")
    sol = solve(load_case(FIXTURES / "case3_usecase.m"), PowerFlowOptions(method=Method.NEWTON))
    assert doc["converged"] and doc["method"] == "newton"
    np.testing.assert_allclose([b["vm"] for b in doc["buses"]], sol.vm, atol=1e-9)
    np.testing.assert_allclose([b["va_deg"] for b in doc["buses"]], np.degrees(sol.va), atol=1e-8)
    np.testing.assert_allclose([g["pg_mw"] for g in doc["generators"]], sol.pg * 100, atol=1e-7)


@pytest.mark.parametrize("method", ["gs", "fdlf", "dc"])
def test_pf_methods(method):
    doc = call_json("pf", CASE, "--method", method)
    assert doc["converged"]
    assert doc["method"] == method


def test_pf_table_and_csv():
    code, out, _ = call("pf", CASE)
    assert code == 0 and "converged in" in out and "losses" in out
    code, out, _ = call("pf", CASE, "--output", "csv")
    assert code == 0
    assert out.splitlines()[0] == "bus,type,vm_pu,va_deg,pd_mw,qd_mvar"


def test_pf_wind_injection_changes_flows():
    base = call_json("pf", CASE)
    windy = call_json("pf", CASE, "--wind", "2:100")
    assert windy["generators"][0]["pg_mw"] < base["generators"][0]["pg_mw"] - 50


def test_pf_not_converged_exit_code():
    code, out, err = call("pf", CASE, "--max-iter", "1", "--tol", "1e-14")
    assert code == 3
    assert "did not converge" in err
    assert "NOT converged" in out


def test_dcpf():
    doc = call_json("dcpf", CASE, kind="dcpf")
    assert doc["kind"] == "dcpf"
    assert all(b["vm"] == 1.0 for b in doc["buses"])


def test_opf_usecase():
    doc = call_json("opf", CASE, "--wind", "2:100")
    assert doc["status"] == "optimal"
    pg = [g["pg_mw"] for g in doc["generators"]]
    assert sum(pg) + 100 == pytest.approx(0, abs=1e-6)
    assert doc["totals"]["served_dispatchable_mw"] == pytest.approx(450)
    ref = run_dcopf(load_case(FIXTURES / "case3_usecase.m"), {2: 100.0})
    assert doc["objective"] == pytest.approx(ref.objective, abs=1e-6)
    np.testing.assert_allclose([b["lmp"] for b in doc["buses"]], ref.lmp, atol=1e-7)
    assert [b["binding"] for b in doc["branches"]] == [False, True, False]


def test_opf_table_mentions_cost():
    code, out, _ = call("opf", CASE, "--wind", "2:100")
    assert code == 0
    assert "DC-OPF optimal" in out and "bus 2 100.00 MW" in out


def test_validate():
    doc = call_json("validate", CASE)
    assert doc["ok"] and doc["n_bus"] == 3 and doc["n_storage"] == 1


def test_stdin_input():
    text = (FIXTURES / "case3_usecase.m").read_text()
    code, out, err = call("opf", "-", "--output", "json", "--wind", "2:100", stdin=text)
    assert code == 0, err
    assert json.loads(out)["case"] == "stdin"
    json_text = (FIXTURES / "case3_usecase.json").read_text()
    code, _, err = call("validate", "-", stdin=json_text)
    assert code == 0, err


@pytest.mark.parametrize("argv, code", [
    (["pf", "no/such/case.m"], 2),
    (["pf", str(FIXTURES / "case3_usecase.m"), "--bogus"], 1),
    (["pf", CASE, "--method", "magic"], 1),
    (["pf", CASE, "--tol", "0"], 1),
    (["pf", CASE, "--wind", "2-100"], 1),
    (["pf", CASE, "--wind", "9:10"], 2),
    (["opf", CASE, "--wind", "9:10"], 2),
    (["frobnicate"], 1),
    ([], 1),
    (["mp", CASE, "--scenarios", "persistent"], 2),
    (["mp", STUDY, "--horizon", "3"], 2),
    (["mp", STUDY, "--horizon", "0"], 1),
    (["scenarios", STUDY, "--scenarios", "sampled", "--count", "0"], 1),
])
def test_exit_codes(argv, code):
    assert call(*argv)[0] == code


def test_malformed_input_is_located():
    bad = FIXTURES.parent / "tests" / "fixtures" / "malformed" / "unknown_bus.m"
    code, _, err = call("validate", bad)
    assert code == 2
    assert "unknown_bus.m:" in err and "gridflow: error:" in err


def test_infeasible_opf_exit_code(tmp_path):
    case = load_case(FIXTURES / "case3_usecase.m")
    buses = list(case.buses)
    buses[2] = dataclasses.replace(buses[2], pd=50.0)
    path = tmp_path / "starved.m"
    save_case(case.replace(buses=tuple(buses)), path)
    code, out, err = call("opf", path, "--output", "json")
    assert code == 3
    assert json.loads(out)["status"] == "infeasible"
    assert "infeasible" in err


def test_dump_ybus(tmp_path):
    target = tmp_path / "ybus.mtx"
    assert call("pf", CASE, "--dump-ybus", target)[0] == 0
    y = scipy.io.mmread(target).toarray()
    want = build_system_matrices(load_case(FIXTURES / "case3_usecase.m")).ybus.toarray()
    np.testing.assert_allclose(y, want, rtol=1e-15)


def test_export_lp(tmp_path):
    target = tmp_path / "opf.lp"
    assert call("opf", CASE, "--wind", "2:100", "--export-lp", target)[0] == 0
    text = target.read_text()
    assert text.startswith("\\") or text.lower().startswith("minimize")
    assert "Subject To" in text and "End" in text
    target = tmp_path / "mp.lp"
    assert call("mp", STUDY, "--export-lp", target)[0] == 0
    assert "charge(forecast_1_1)" in target.read_text()


def test_mp_forecast():
    doc = call_json("mp", STUDY)
    assert doc["status"] == "optimal" and doc["horizon"] == 12
    assert doc["expected_cost"] == pytest.approx(-4120779.22, abs=0.01)
    assert doc["checks"]["storage_residual"] <= 1e-9


def test_mp_persistent():
    doc = call_json("mp", STUDY, "--scenarios", "persistent")
    assert doc["expected_cost"] == pytest.approx(-4116503.83, abs=0.01)
    assert doc["checks"]["nonanticipativity_spread"] <= 1e-9
    assert len(doc["scenarios"]) == 3


def test_mp_bare_case_and_table():
    code, out, err = call("mp", CASE, "--horizon", "2", "--no-terminal-storage")
    assert code == 0, err
    assert "1 scenario(s) x 2 periods" in out
    code, out, _ = call("mp", STUDY, "--output", "csv")
    assert out.splitlines()[0] == "scenario,period,device,quantity,value"


def test_scenarios_command():
    doc = call_json("scenarios", STUDY, "--count", "30", "--seed", "7")
    assert doc["probability_sum"] == pytest.approx(1.0)
    assert all(s["states"][0] == "average" for s in doc["scenarios"])
    code, _, err = call("scenarios", STUDY, "--scenarios", "enumerate")
    assert code == 2 and "3^12" in err


@pytest.mark.parametrize("argv", [
    ["pf", CASE, "--output", "json"],
    ["opf", CASE, "--wind", "2:100", "--output", "csv"],
    ["scenarios", STUDY, "--count", "25", "--seed", "3", "--output", "json"],
    ["mp", STUDY, "--scenarios", "sampled", "--count", "6", "--seed", "3", "--output", "json"],
])
def test_reruns_are_byte_identical(argv):
    first = call(*argv)
    assert first[0] == 0
    assert call(*argv)[1] == first[1]


def test_seed_changes_sample():
    a = call("scenarios", STUDY, "--count", "25", "--seed", "1", "--output", "csv")[1]
    b = call("scenarios", STUDY, "--count", "25", "--seed", "2", "--output", "csv")[1]
    assert a != b


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gridflow.cli", "opf", CASE, "--wind", "2:100", "--output", "json"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["status"] == "optimal"
    proc = subprocess.run([sys.executable, "-m", "gridflow.cli", "pf", "missing.m"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 2
