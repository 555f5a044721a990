"""Multi-period DC dispatch with storage, ramping and wind scenarios."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from ..model import Case
from ..opf.dcopf import NetworkVars, add_network, check_opf_case, var_name
from ..opf.lp import LinearProgram, LpBuilder, LpSolution, LpStatus
from ..opf.simplex import solve_lp
from ..powerflow.dc import make_bdc
from .scenarios import Profile, RenewableUnit, ScenarioSet

DT = 1.0  # hours per period


def _load_matrix(case: Case, profiles, horizon: int) -> np.ndarray:
    """Per-bus multipliers ``(T, n_bus)``."""
    f = np.ones((horizon, case.n_bus))
    if profiles is None:
        return f
    if isinstance(profiles, Profile):
        profiles = {None: profiles}
    for bus_id, prof in profiles.items():
        prof = prof if isinstance(prof, Profile) else Profile(tuple(prof))
        if len(prof) != horizon:
            raise ValueError(f"profile has {len(prof)} periods, horizon is {horizon}")
        if bus_id is None:
            f[:] = prof.as_array()[:, None]
        else:
            f[:, case.index[bus_id]] = prof.as_array()
    return f


def _period_case(case: Case, mult: np.ndarray) -> Case:
    """Dispatchable loads follow the load profile of their bus."""
    gens = list(case.generators)
    changed = False
    for k, g in enumerate(gens):
        if g.is_dispatchable_load:
            m = mult[case.gen_bus[k]]
            if m != 1.0:
                gens[k] = replace(g, pmin=g.pmin * m, pmax=g.pmax * m)
                changed = True
    return case.replace(generators=tuple(gens)) if changed else case


@dataclass
class _Index:
    net: list[list[NetworkVars]]          # [s][t]
    charge: np.ndarray                    # (S, T, U) column ids
    discharge: np.ndarray
    energy: np.ndarray
    wind: np.ndarray                      # (S, T, R)
    rho_cap: np.ndarray                   # (S, T, R) MW available
    case_t: list[Case]
    load: np.ndarray                      # (T, n_bus) p.u.


def _assemble(case, profiles, wind, horizon, renewables, terminal_storage):
    check_opf_case(case)
    renewables = tuple(renewables or ())
    if wind is None:
        if renewables:
            raise ValueError("renewable units given without an availability scenario set")
        wind = ScenarioSet.deterministic(np.ones(horizon or 1))
    if horizon is None:
        horizon = wind.horizon
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if wind.horizon != horizon:
        raise ValueError(f"scenario paths have {wind.horizon} periods, horizon is {horizon}")
    base = case.base_mva
    mult = _load_matrix(case, profiles, horizon)
    load = case.pd[None, :] * mult
    case_t = [_period_case(case, mult[t]) for t in range(horizon)]
    dc = make_bdc(case)

    ids = case.index
    st_bus = [ids[u.bus] for u in case.storage]
    re_bus = [ids[r.bus] for r in renewables]
    n_s, n_u, n_r = len(wind), len(case.storage), len(renewables)
    rho = wind.rho(max(n_r, 1))[:, :, :n_r]
    cap = rho * np.array([r.p_max for r in renewables])[None, None, :]

    lp = LpBuilder()
    shape = (n_s, horizon)
    charge = np.zeros(shape + (n_u,), dtype=np.int64)
    discharge = np.zeros_like(charge)
    energy = np.zeros_like(charge)
    wcol = np.zeros(shape + (n_r,), dtype=np.int64)
    net: list[list[NetworkVars]] = []

    for s, scen in enumerate(wind):
        prob = scen.probability
        sname = wind.names[s]
        row: list[NetworkVars] = []
        for t in range(horizon):
            keys = (sname, t + 1)
            extra: dict[int, list[tuple[int, float]]] = {}
            for u, unit in enumerate(case.storage):
                c = lp.add_var(var_name("charge", *keys, u + 1), 0.0, unit.p_charge_max)
                d = lp.add_var(var_name("discharge", *keys, u + 1), 0.0, unit.p_discharge_max)
                e = lp.add_var(var_name("energy", *keys, u + 1), 0.0, unit.e_max)
                charge[s, t, u], discharge[s, t, u], energy[s, t, u] = c, d, e
                extra.setdefault(st_bus[u], []).extend([(d, 1.0), (c, -1.0)])
            for r, unit in enumerate(renewables):
                w = lp.add_var(var_name(unit.name, *keys, r + 1), 0.0, cap[s, t, r] / base)
                wcol[s, t, r] = w
                extra.setdefault(re_bus[r], []).append((w, 1.0))
            nv = add_network(lp, case_t[t], dc, load[t], keys, weight=prob * DT, extra=extra)
            row.append(nv)

            for u, unit in enumerate(case.storage):
                terms = {energy[s, t, u]: 1.0, charge[s, t, u]: -unit.eta_charge * DT,
                         discharge[s, t, u]: DT / unit.eta_discharge}
                rhs = unit.e_initial if t == 0 else 0.0
                if t > 0:
                    terms[energy[s, t - 1, u]] = -1.0
                lp.add_eq(terms, rhs, var_name("soc", *keys, u + 1))

            if t > 0:
                prev = row[t - 1]
                for k, col in nv.pg.items():
                    ramp = case.generators[k].ramp
                    if np.isfinite(ramp) and k in prev.pg:
                        lp.add_in({col: 1.0, prev.pg[k]: -1.0}, "<", ramp, var_name("ramp_up", *keys, k + 1))
                        lp.add_in({col: 1.0, prev.pg[k]: -1.0}, ">", -ramp, var_name("ramp_down", *keys, k + 1))
        if terminal_storage:
            for u, unit in enumerate(case.storage):
                lp.add_in({energy[s, horizon - 1, u]: 1.0}, ">", unit.e_initial, var_name("terminal", sname, u + 1))
        net.append(row)

    # first-period decisions are shared by every scenario
    for s in range(1, n_s):
        keys = (wind.names[s], 1)
        for k, col in net[s][0].pg.items():
            lp.add_eq({col: 1.0, net[0][0].pg[k]: -1.0}, 0.0, var_name("nonant_pg", *keys, k + 1))
        for u in range(n_u):
            lp.add_eq({charge[s, 0, u]: 1.0, charge[0, 0, u]: -1.0}, 0.0, var_name("nonant_c", *keys, u + 1))
            lp.add_eq({discharge[s, 0, u]: 1.0, discharge[0, 0, u]: -1.0}, 0.0, var_name("nonant_d", *keys, u + 1))

    idx = _Index(net, charge, discharge, energy, wcol, cap, case_t, load)
    return lp.build(), idx


def build_multiperiod(
    case: Case,
    profiles: Profile | Mapping[int, Profile] | None = None,
    wind: ScenarioSet | None = None,
    horizon: int | None = None,
    renewables: Sequence[RenewableUnit] = (),
    terminal_storage: bool = True,
) -> LinearProgram:
    """Expected-cost LP over all scenarios and periods.

    ``profiles`` scales demand per period, either system-wide (a single
    :class:`Profile`) or per external bus id. ``wind`` supplies the
    availability of each unit in ``renewables``.
    """
    lp, _ = _assemble(case, profiles, wind, horizon, renewables, terminal_storage)
    return lp


@dataclass
class DispatchSchedule:
    status: LpStatus
    expected_cost: float      # $
    probabilities: np.ndarray  # (S,)
    scenario_names: tuple[str, ...]
    pg: np.ndarray            # (S, T, G) MW
    charge: np.ndarray        # (S, T, U) MW
    discharge: np.ndarray     # (S, T, U) MW
    energy: np.ndarray        # (S, T, U) MWh, end of period
    wind: np.ndarray          # (S, T, R) MW delivered
    curtailment: np.ndarray   # (S, T, R) MW
    flows: np.ndarray         # (S, T, L) MW
    lmp: np.ndarray           # (S, T, B) $/MWh, conditional on the scenario
    scenario_cost: np.ndarray  # (S,) $
    load: np.ndarray          # (T, B) MW fixed demand
    case: Case
    lp: LinearProgram
    solution: LpSolution
    renewables: tuple[RenewableUnit, ...] = ()

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    @property
    def horizon(self) -> int:
        return self.pg.shape[1]

    def nonanticipativity_spread(self) -> float:
        first = [self.pg[:, 0], self.charge[:, 0], self.discharge[:, 0]]
        spread = [np.ptp(a, axis=0).max() for a in first if a.size]
        return float(max(spread, default=0.0))

    def storage_residual(self) -> float:
        """Largest MWh error of the energy recurrence recomputed from charge/discharge."""
        if not self.case.storage:
            return 0.0
        e0 = np.array([u.e_initial for u in self.case.storage]) * self.case.base_mva
        eta_c = np.array([u.eta_charge for u in self.case.storage])
        eta_d = np.array([u.eta_discharge for u in self.case.storage])
        prev = np.concatenate([np.broadcast_to(e0, (self.energy.shape[0], 1, len(e0))), self.energy[:, :-1]], axis=1)
        expect = prev + eta_c * self.charge * DT - self.discharge * DT / eta_d
        return float(np.abs(self.energy - expect).max())

    def ramp_violation(self) -> float:
        ramp = np.array([g.ramp for g in self.case.generators]) * self.case.base_mva
        if self.horizon < 2 or not np.isfinite(ramp).any():
            return 0.0
        step = np.abs(np.diff(self.pg, axis=1))
        return float(max(0.0, (step - ramp).max()))

    def to_rows(self):
        """``(scenario, period, device, quantity, value)`` tuples, plot-ready."""
        names = self.scenario_names
        for s, sname in enumerate(names):
            for t in range(self.horizon):
                for k in range(self.pg.shape[2]):
                    yield sname, t + 1, f"gen{k + 1}", "pg_mw", self.pg[s, t, k]
                for u in range(self.charge.shape[2]):
                    yield sname, t + 1, f"storage{u + 1}", "charge_mw", self.charge[s, t, u]
                    yield sname, t + 1, f"storage{u + 1}", "discharge_mw", self.discharge[s, t, u]
                    yield sname, t + 1, f"storage{u + 1}", "energy_mwh", self.energy[s, t, u]
                for r, unit in enumerate(self.renewables):
                    yield sname, t + 1, f"{unit.name}{r + 1}", "output_mw", self.wind[s, t, r]
                    yield sname, t + 1, f"{unit.name}{r + 1}", "curtailment_mw", self.curtailment[s, t, r]
                for l in range(self.flows.shape[2]):
                    yield sname, t + 1, f"branch{l + 1}", "flow_mw", self.flows[s, t, l]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "period", "device", "quantity", "value"])
        for sname, t, dev, qty, val in self.to_rows():
            w.writerow([sname, t, dev, qty, f"{_clean(val):.6f}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "expected_cost": _round(self.expected_cost, 6),
            "horizon": self.horizon,
            "scenarios": [
                {"name": n, "probability": float(p), "cost": _round(c, 6)}
                for n, p, c in zip(self.scenario_names, self.probabilities, self.scenario_cost)
            ],
            "series": [
                {"scenario": s, "period": t, "device": d, "quantity": q, "value": _round(v, 6)}
                for s, t, d, q, v in self.to_rows()
            ],
        }


def _clean(v: float) -> float:
    return 0.0 if abs(v) < 5e-10 else float(v)


def _round(v: float, nd: int) -> float:
    return round(_clean(v), nd) + 0.0


def solve_multiperiod(
    case: Case,
    profiles: Profile | Mapping[int, Profile] | None = None,
    wind: ScenarioSet | None = None,
    horizon: int | None = None,
    renewables: Sequence[RenewableUnit] = (),
    terminal_storage: bool = True,
) -> DispatchSchedule:
    lp, idx = _assemble(case, profiles, wind, horizon, renewables, terminal_storage)
    sol = solve_lp(lp)
    if wind is None:
        wind = ScenarioSet.deterministic(np.ones(len(idx.case_t)))
    base = case.base_mva
    n_s, n_t = len(wind), len(idx.case_t)
    n_g, n_l, n_b = case.n_gen, case.n_branch, case.n_bus
    shape = (n_s, n_t)
    pg = np.zeros(shape + (n_g,))
    flows = np.zeros(shape + (n_l,))
    lmp = np.full(shape + (n_b,), np.nan)
    scen_cost = np.full(n_s, np.nan)
    charge = np.zeros(idx.charge.shape)
    discharge = np.zeros_like(charge)
    energy = np.zeros_like(charge)
    used = np.zeros(idx.wind.shape)
    if sol.optimal:
        x = sol.x
        dc = make_bdc(case)
        probs = wind.probabilities
        scen_cost[:] = 0.0
        for s in range(n_s):
            for t in range(n_t):
                nv = idx.net[s][t]
                theta = np.array([b.va for b in case.buses], dtype=float)
                for i, col in nv.theta.items():
                    theta[i] = x[col]
                for k, col in nv.pg.items():
                    pg[s, t, k] = x[col] * base
                    scen_cost[s] += float(case.generators[k].cost(pg[s, t, k])) * DT
                flows[s, t] = (dc.bf @ theta + dc.pfinj) * base
                if probs[s] > 0:
                    lmp[s, t] = -sol.eq_duals[nv.balance] / (base * probs[s] * DT)
        charge = x[idx.charge] * base
        discharge = x[idx.discharge] * base
        energy = x[idx.energy] * base
        used = x[idx.wind] * base if idx.wind.size else used
    return DispatchSchedule(
        status=sol.status, expected_cost=sol.objective, probabilities=wind.probabilities,
        scenario_names=wind.names, pg=pg, charge=charge, discharge=discharge, energy=energy,
        wind=used, curtailment=np.maximum(idx.rho_cap - used, 0.0) if sol.optimal else np.zeros_like(used),
        flows=flows, lmp=lmp, scenario_cost=scen_cost, load=idx.load * base, case=case, lp=lp,
        solution=sol, renewables=tuple(renewables),
    )
