"""``gridflow`` command line.

Exit codes: 0 success, 1 usage error, 2 unreadable or invalid input,
3 solver failure (no convergence, infeasible, unbounded, singular system).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .admittance import build_system_matrices, write_matrix_market
from .caseio import CaseFormat, CaseParseError, load_case, parse_case
from .model import BusType, Case, validate
from .opf import LpStatus, OpfModelError, export_lp, run_dcopf
from .powerflow import Method, PowerFlowOptions, SingularJacobianError, solve, solve_dc

SCHEMA_VERSION = "1.0"

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class SolverError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------- helpers


def load_schema(kind: str) -> dict:
    """JSON schema shipped for the output of ``kind`` (dcpf shares the pf schema)."""
    name = "pf" if kind == "dcpf" else kind
    return json.loads(resources.files("gridflow").joinpath(f"schemas/{name}.json").read_text(encoding="utf-8"))


def _num(v, nd=10):
    """Round for stable text output; ``None`` for non-finite values (JSON null)."""
    v = float(v)
    if not math.isfinite(v):
        return None
    return round(v, nd) + 0.0


def _wind(values) -> dict[int, float]:
    out: dict[int, float] = {}
    for item in values or ():
        try:
            bus, mw = item.split(":")
            out[int(bus)] = out.get(int(bus), 0.0) + float(mw)
        except ValueError:
            raise UsageError(f"--wind expects BUS:MW, got {item!r}") from None
    return out


def _read_case(path: str, fmt: str | None, stdin) -> Case:
    try:
        if path == "-":
            text = stdin.read()
            return parse_case(text, fmt or _sniff(text), name="stdin", source="<stdin>")
        return load_case(path, fmt)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    except CaseParseError as exc:
        raise InputError(str(exc)) from None
    except (UnicodeDecodeError, IsADirectoryError, PermissionError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _sniff(text: str) -> CaseFormat:
    return CaseFormat.JSON if text.lstrip().startswith("{") else CaseFormat.MATRIX


def _apply_wind(case: Case, wind: dict[int, float]) -> Case:
    for bus, mw in wind.items():
        if bus not in case.index:
            raise InputError(f"--wind refers to unknown bus {bus}")
        case = case.with_bus_injection(bus, mw / case.base_mva)
    return case


def _check_fatal(case: Case):
    report = validate(case)
    if report.fatal:
        msgs = "; ".join(f"{i.code}: {i.message}" for i in report.fatal)
        raise InputError(f"invalid case {case.name}: {msgs}")


def _cell(fmt, v) -> str:
    if v is None:
        return "-"
    text = fmt.format(v)
    if text.startswith("-") and not text.strip("-0."):
        text = text[1:]  # no negative zero
    return text


def _table(headers, rows, formats) -> str:
    cells = [[_cell(f, v) for f, v in zip(formats, row)] for row in rows]
    widths = [max(len(h), *(len(c[k]) for c in cells)) if cells else len(h) for k, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _csv(sections) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for k, (headers, rows) in enumerate(sections):
        if k:
            buf.write("\n")
        w.writerow(headers)
        for row in rows:
            w.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _header(kind: str, case: Case) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "gridflow_version": __version__,
            "case": case.name, "base_mva": _num(case.base_mva)}


# --------------------------------------------------------------------------- commands


def cmd_validate(args, out) -> int:
    case = _read_case(args.case, args.format, args.stdin)
    report = validate(case)
    issues = [{"code": i.code, "message": i.message, "fatal": i.fatal} for i in report]
    if args.output == "json":
        doc = _header("validate", case)
        doc.update({"ok": report.ok, "n_bus": case.n_bus, "n_branch": case.n_branch,
                    "n_gen": case.n_gen, "n_storage": len(case.storage), "issues": issues})
        out.write(_json(doc))
    elif args.output == "csv":
        out.write(_csv([(["code", "fatal", "message"], [[i["code"], int(i["fatal"]), i["message"]] for i in issues])]))
    else:
        out.write(f"case {case.name}: {case.n_bus} buses, {case.n_branch} branches, "
                  f"{case.n_gen} generators, {len(case.storage)} storage units\n")
        if report.ok:
            out.write("no issues\n")
        for i in issues:
            out.write(f"{'FATAL' if i['fatal'] else 'warning'} {i['code']}: {i['message']}\n")
    return EXIT_INPUT if report.fatal else EXIT_OK


def _pf_output(args, out, sol, kind):
    case = sol.case
    base = case.base_mva
    ids = case.index.ids
    types = sol.bus_types if sol.bus_types is not None else case.bus_types
    fb, tb = case.f_bus, case.t_bus
    bus_rows = [[ids[i], BusType(int(types[i])).name, sol.vm[i], math.degrees(sol.va[i]),
                 case.pd[i] * base, case.qd[i] * base] for i in range(case.n_bus)]
    gen_rows = [[k + 1, case.generators[k].bus, sol.pg[k] * base, sol.qg[k] * base] for k in range(case.n_gen)]
    br_rows = [[l + 1, ids[fb[l]], ids[tb[l]], sol.sf[l].real * base, sol.sf[l].imag * base,
                sol.st[l].real * base, sol.st[l].imag * base, sol.losses[l] * base]
               for l in range(case.n_branch)]
    gen_on = case.gen_on
    totals = {"generation_mw": float(sol.pg[gen_on].sum() * base) if case.n_gen else 0.0,
              "load_mw": float(case.pd.sum() * base), "losses_mw": float(sol.losses.sum() * base)}
    if args.output == "json":
        doc = _header(kind, case)
        doc.update({
            "method": sol.method.value, "converged": bool(sol.converged), "iterations": int(sol.iterations),
            "mismatch": _num(sol.mismatch, 14),
            "buses": [{"id": r[0], "type": r[1], "vm": _num(r[2]), "va_deg": _num(r[3]),
                       "pd_mw": _num(r[4]), "qd_mvar": _num(r[5])} for r in bus_rows],
            "generators": [{"index": r[0], "bus": r[1], "pg_mw": _num(r[2]), "qg_mvar": _num(r[3])}
                           for r in gen_rows],
            "branches": [{"index": r[0], "from": r[1], "to": r[2], "pf_mw": _num(r[3]), "qf_mvar": _num(r[4]),
                          "pt_mw": _num(r[5]), "qt_mvar": _num(r[6]), "loss_mw": _num(r[7])} for r in br_rows],
            "totals": {k: _num(v) for k, v in totals.items()},
        })
        out.write(_json(doc))
    elif args.output == "csv":
        out.write(_csv([
            (["bus", "type", "vm_pu", "va_deg", "pd_mw", "qd_mvar"], [_round_row(r) for r in bus_rows]),
            (["gen", "bus", "pg_mw", "qg_mvar"], [_round_row(r) for r in gen_rows]),
            (["branch", "from", "to", "pf_mw", "qf_mvar", "pt_mw", "qt_mvar", "loss_mw"],
             [_round_row(r) for r in br_rows]),
        ]))
    else:
        state = "converged" if sol.converged else "NOT converged"
        out.write(f"{case.name}: {sol.method.value} {state} in {sol.iterations} iterations, "
                  f"max mismatch {sol.mismatch:.3e} p.u.\n\n")
        out.write(_table(["bus", "type", "vm", "va_deg", "pd_MW", "qd_MVAr"], bus_rows,
                         ["{}", "{}", "{:.4f}", "{:.4f}", "{:.2f}", "{:.2f}"]) + "\n\n")
        out.write(_table(["gen", "bus", "pg_MW", "qg_MVAr"], gen_rows, ["{}", "{}", "{:.2f}", "{:.2f}"]) + "\n\n")
        out.write(_table(["branch", "from", "to", "pf_MW", "qf_MVAr", "pt_MW", "qt_MVAr", "loss_MW"], br_rows,
                         ["{}", "{}", "{}"] + ["{:.2f}"] * 5) + "\n\n")
        out.write(f"generation {totals['generation_mw']:.2f} MW, load {totals['load_mw']:.2f} MW, "
                  f"losses {totals['losses_mw']:.2f} MW\n")


def _round_row(row, nd=8):
    return [_num(v, nd) if isinstance(v, (float, np.floating)) else v for v in row]


def cmd_pf(args, out) -> int:
    case = _apply_wind(_read_case(args.case, args.format, args.stdin), _wind(args.wind))
    _check_fatal(case)
    if args.dump_ybus:
        write_matrix_market(build_system_matrices(case).ybus, args.dump_ybus, comment=f"Ybus of {case.name}")
    try:
        opts = PowerFlowOptions(method=Method.parse(args.method), tol=args.tol, max_iter=args.max_iter,
                                enforce_q_limits=args.enforce_q_limits)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        sol = solve(case, opts)
    except (SingularJacobianError, np.linalg.LinAlgError) as exc:
        raise SolverError(str(exc)) from None
    _pf_output(args, out, sol, "pf")
    if not sol.converged:
        print(f"gridflow: power flow did not converge after {sol.iterations} iterations "
              f"(mismatch {sol.mismatch:.3e})", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_dcpf(args, out) -> int:
    case = _apply_wind(_read_case(args.case, args.format, args.stdin), _wind(args.wind))
    _check_fatal(case)
    try:
        sol = solve_dc(case)
    except np.linalg.LinAlgError as exc:
        raise SolverError(str(exc)) from None
    _pf_output(args, out, sol, "dcpf")
    return EXIT_OK


def cmd_opf(args, out) -> int:
    case = _read_case(args.case, args.format, args.stdin)
    _check_fatal(case)
    wind = _wind(args.wind)
    for bus in wind:
        if bus not in case.index:
            raise InputError(f"--wind refers to unknown bus {bus}")
    try:
        res = run_dcopf(case, wind)
    except OpfModelError as exc:
        raise InputError(str(exc)) from None
    except np.linalg.LinAlgError as exc:
        raise SolverError(str(exc)) from None
    if args.export_lp:
        Path(args.export_lp).write_text(export_lp(res.lp), encoding="utf-8")
    if not res.optimal:
        print(f"gridflow: DC-OPF {res.status.value}: {res.solution.message}", file=sys.stderr)
        if args.output == "json":
            doc = _header("opf", case)
            doc.update({"status": res.status.value, "objective": None, "generators": [], "buses": [],
                        "branches": [], "injections": [], "totals": {}})
            out.write(_json(doc))
        return EXIT_SOLVER
    base = case.base_mva
    ids = case.index.ids
    disp = np.array([g.is_dispatchable_load for g in case.generators], dtype=bool)
    served = float(-res.pg[disp].sum()) if disp.any() else 0.0
    supply = float(res.pg[~disp].sum()) + sum(wind.values())
    fixed = float(case.pd.sum() * base)
    gen_rows = [[k + 1, g.bus, res.pg[k], g.pmin * base, g.pmax * base, float(g.cost(res.pg[k]))]
                for k, g in enumerate(case.generators)]
    bus_rows = [[ids[i], res.lmp[i]] for i in range(case.n_bus)]
    br_rows = [[l + 1, ids[case.f_bus[l]], ids[case.t_bus[l]], res.flows[l],
                case.branches[l].rate_a * base if case.branches[l].rate_a > 0 else None,
                bool(res.binding[l]), res.congestion[l]] for l in range(case.n_branch)]
    if args.output == "json":
        doc = _header("opf", case)
        doc.update({
            "status": res.status.value, "objective": _num(res.objective, 6), "iterations": res.solution.iterations,
            "injections": [{"bus": b, "mw": _num(mw)} for b, mw in sorted(wind.items())],
            "generators": [{"index": r[0], "bus": r[1], "pg_mw": _num(r[2], 8), "pmin_mw": _num(r[3]),
                            "pmax_mw": _num(r[4]), "cost": _num(r[5], 6), "dispatchable_load": bool(disp[r[0] - 1])}
                           for r in gen_rows],
            "buses": [{"id": r[0], "lmp": _num(r[1], 8)} for r in bus_rows],
            "branches": [{"index": r[0], "from": r[1], "to": r[2], "flow_mw": _num(r[3], 8),
                          "rate_mw": _num(r[4]) if r[4] is not None else None, "binding": r[5],
                          "congestion": _num(r[6], 8)} for r in br_rows],
            "totals": {"supply_mw": _num(supply, 8), "served_dispatchable_mw": _num(served, 8),
                       "fixed_load_mw": _num(fixed, 8), "max_limit_violation_mw": _num(res.max_violation, 12)},
        })
        out.write(_json(doc))
    elif args.output == "csv":
        out.write(_csv([
            (["gen", "bus", "pg_mw", "pmin_mw", "pmax_mw", "cost"], [_round_row(r) for r in gen_rows]),
            (["bus", "lmp"], [_round_row(r) for r in bus_rows]),
            (["branch", "from", "to", "flow_mw", "rate_mw", "binding", "congestion"],
             [_round_row(r) for r in br_rows]),
        ]))
    else:
        out.write(f"{case.name}: DC-OPF {res.status.value}, cost {res.objective:.2f} $/h\n")
        if wind:
            out.write("fixed injections: " + ", ".join(f"bus {b} {mw:.2f} MW" for b, mw in sorted(wind.items())) + "\n")
        out.write("\n")
        out.write(_table(["gen", "bus", "pg_MW", "pmin_MW", "pmax_MW", "cost_$/h"], gen_rows,
                         ["{}", "{}", "{:.2f}", "{:.2f}", "{:.2f}", "{:.2f}"]) + "\n\n")
        out.write(_table(["bus", "lmp_$/MWh"], bus_rows, ["{}", "{:.2f}"]) + "\n\n")
        out.write(_table(["branch", "from", "to", "flow_MW", "rate_MW", "binding", "cong_$/MWh"], br_rows,
                         ["{}", "{}", "{}", "{:.2f}", "{:.2f}", "{}", "{:.2f}"]) + "\n\n")
        out.write(f"supply {supply:.2f} MW, dispatchable load served {served:.2f} MW, fixed load {fixed:.2f} MW\n")
    return EXIT_OK


def _study(args):
    """A study JSON, or a bare case run with a flat profile and no renewables."""
    from .multiperiod import Profile, ScenarioSet, Study, parse_study

    path = args.study
    doc = None
    if path != "-" and path.endswith(".json") and Path(path).is_file():
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            doc = None  # let the case parser report a located error
    if isinstance(doc, dict) and "horizon" in doc and "case" in doc:
        try:
            study = parse_study(doc, Path(path).parent)
        except (FileNotFoundError, CaseParseError) as exc:
            raise InputError(str(exc)) from None
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: {exc}") from None
        if args.horizon is not None and args.horizon != study.horizon:
            raise InputError(f"--horizon {args.horizon} does not match the study horizon {study.horizon}")
        return study
    case = _read_case(path, args.format, args.stdin)
    horizon = args.horizon or 1
    return Study(case, horizon, Profile.flat(horizon), (), ScenarioSet.deterministic(np.ones(horizon)))


def _scenario_set(args, study):
    from .multiperiod import persistent_scenarios, sample_scenarios

    mode = args.scenarios
    if mode == "forecast":
        return study.forecast
    tm = study.transition
    if tm is None:
        raise InputError(f"scenario mode {mode!r} needs a transition model in the study file")
    try:
        if mode == "persistent":
            return persistent_scenarios(tm, study.horizon)
        if mode == "enumerate":
            return sample_scenarios(tm, 0, study.horizon, initial=study.initial)
        if args.count < 1:
            raise UsageError("--count must be positive for sampled scenarios (use --scenarios enumerate for all paths)")
        return sample_scenarios(tm, args.count, study.horizon, seed=args.seed, initial=study.initial)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_scenarios(args, out) -> int:
    study = _study(args)
    sset = _scenario_set(args, study)
    if args.output == "json":
        doc = {"schema_version": SCHEMA_VERSION, "kind": "scenarios", "gridflow_version": __version__,
               "mode": args.scenarios, "seed": args.seed}
        d = sset.to_dict()
        doc["horizon"] = d["horizon"]
        doc["probability_sum"] = math.fsum(sset.probabilities)
        doc["scenarios"] = [{"name": s["name"], "probability": s["probability"], "states": s["states"],
                             "rho": [_num(v, 12) for v in np.ravel(s["rho"])]} for s in d["scenarios"]]
        out.write(_json(doc))
    elif args.output == "csv":
        out.write(sset.to_csv())
    else:
        rows = [[name, f"{s.probability:.6f}", " ".join(s.states) if s.states else "",
                 " ".join(f"{v:.4f}" for v in np.ravel(s.rho))] for name, s in zip(sset.names, sset)]
        out.write(f"{len(sset)} scenarios over {sset.horizon} periods ({args.scenarios})\n\n")
        out.write(_table(["scenario", "probability", "states", "rho"], rows, ["{}"] * 4) + "\n")
    return EXIT_OK


def cmd_mp(args, out) -> int:
    from .multiperiod import build_multiperiod, solve_multiperiod

    study = _study(args)
    _check_fatal(study.case)
    sset = _scenario_set(args, study)
    kwargs = dict(profiles=study.load_profile, wind=sset, horizon=study.horizon,
                  renewables=study.renewables, terminal_storage=not args.no_terminal_storage)
    try:
        if args.export_lp:
            Path(args.export_lp).write_text(export_lp(build_multiperiod(study.case, **kwargs)), encoding="utf-8")
        sched = solve_multiperiod(study.case, **kwargs)
    except OpfModelError as exc:
        raise InputError(str(exc)) from None
    except np.linalg.LinAlgError as exc:
        raise SolverError(str(exc)) from None
    if not sched.optimal:
        print(f"gridflow: multi-period dispatch {sched.status.value}: {sched.solution.message}", file=sys.stderr)
        return EXIT_SOLVER
    if args.output == "json":
        doc = _header("mp", study.case)
        doc.update(sched.to_dict())
        doc["mode"] = args.scenarios
        doc["checks"] = {"nonanticipativity_spread": _num(sched.nonanticipativity_spread(), 9),
                         "storage_residual": _num(sched.storage_residual(), 9),
                         "ramp_violation": _num(sched.ramp_violation(), 9)}
        out.write(_json(doc))
    elif args.output == "csv":
        out.write(sched.to_csv())
    else:
        out.write(f"{study.case.name}: {len(sset)} scenario(s) x {sched.horizon} periods, "
                  f"expected cost {sched.expected_cost:.2f} $\n")
        for s, name in enumerate(sched.scenario_names):
            out.write(f"\nscenario {name} (p={sched.probabilities[s]:.6f}, cost {sched.scenario_cost[s]:.2f} $)\n")
            headers = ["t"] + [f"gen{k + 1}_MW" for k in range(study.case.n_gen)]
            headers += [f"st{u + 1}_net_MW" for u in range(len(study.case.storage))]
            headers += [f"st{u + 1}_MWh" for u in range(len(study.case.storage))]
            headers += [f"{r.name}{i + 1}_MW" for i, r in enumerate(study.renewables)]
            rows = []
            for t in range(sched.horizon):
                row = [t + 1] + list(sched.pg[s, t])
                row += list(sched.discharge[s, t] - sched.charge[s, t]) + list(sched.energy[s, t])
                row += list(sched.wind[s, t])
                rows.append(row)
            out.write(_table(headers, rows, ["{}"] + ["{:.2f}"] * (len(headers) - 1)) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridflow", description="Power flow, DC optimal dispatch and multi-period studies.")
    p.add_argument("--version", action="version", version=f"gridflow {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def common(sp, what="case"):
        sp.add_argument(what, help="case file (.m or .json; suffix optional) or '-' for stdin"
                        if what == "case" else "study JSON or case file, or '-' for stdin")
        sp.add_argument("--format", choices=[f.value for f in CaseFormat], help="input format (default: by suffix)")
        sp.add_argument("--output", "-o", choices=["table", "csv", "json"], default="table")

    s = sub.add_parser("validate", help="check a case for structural problems")
    common(s)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("pf", help="AC power flow")
    common(s)
    s.add_argument("--method", default="newton", help="newton, gs, fdlf or dc")
    s.add_argument("--tol", type=float, default=1e-8, help="max mismatch, p.u.")
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--enforce-q-limits", action="store_true")
    s.add_argument("--wind", action="append", metavar="BUS:MW", help="fixed extra injection (repeatable)")
    s.add_argument("--dump-ybus", metavar="PATH", help="write Ybus in Matrix Market format")
    s.set_defaults(func=cmd_pf)

    s = sub.add_parser("dcpf", help="DC power flow at the case dispatch")
    common(s)
    s.add_argument("--wind", action="append", metavar="BUS:MW")
    s.set_defaults(func=cmd_dcpf)

    s = sub.add_parser("opf", help="single-period DC optimal power flow")
    common(s)
    s.add_argument("--wind", action="append", metavar="BUS:MW")
    s.add_argument("--export-lp", metavar="PATH", help="write the LP in CPLEX-LP text format")
    s.set_defaults(func=cmd_opf)

    for name, func, helptext in (("mp", cmd_mp, "multi-period dispatch with storage and wind scenarios"),
                                 ("scenarios", cmd_scenarios, "generate wind availability scenarios")):
        s = sub.add_parser(name, help=helptext)
        common(s, "study")
        s.add_argument("--scenarios", choices=["forecast", "persistent", "sampled", "enumerate"],
                       default="sampled" if name == "scenarios" else "forecast")
        s.add_argument("--count", type=int, default=100 if name == "scenarios" else 20,
                       help="number of sampled paths")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--horizon", type=int, default=None)
        if name == "mp":
            s.add_argument("--no-terminal-storage", action="store_true")
            s.add_argument("--export-lp", metavar="PATH")
        s.set_defaults(func=func)
    return p


def run(argv=None, stdout=None, stderr=None, stdin=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "tol", 1.0) is not None and getattr(args, "tol", 1.0) <= 0:
            raise UsageError("--tol must be positive")
        if getattr(args, "max_iter", None) is not None and args.max_iter < 1:
            raise UsageError("--max-iter must be at least 1")
        if getattr(args, "horizon", None) is not None and args.horizon < 1:
            raise UsageError("--horizon must be at least 1")
        if getattr(args, "count", None) is not None and args.count < 0:
            raise UsageError("--count must be nonnegative")
        args.stdin = stdin or sys.stdin
        buf = io.StringIO()
        old_err = sys.stderr
        sys.stderr = stderr
        try:
            code = args.func(args, buf)
        finally:
            sys.stderr = old_err
        stdout.write(buf.getvalue())
        return code
    except UsageError as exc:
        print(exc, file=stderr)
        print(parser.format_usage().rstrip(), file=stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"gridflow: error: {exc}", file=stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"gridflow: solver failure: {exc}", file=stderr)
        return EXIT_SOLVER
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


def main(argv=None) -> int:
    code = run(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
