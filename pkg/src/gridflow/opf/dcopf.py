"""DC optimal power flow as a linear program in bus angles and generator outputs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..model import BusType, Case, CostModel
from ..powerflow.dc import DCMatrices, make_bdc, solve_dc
from .lp import LinearProgram, LpBuilder, LpSolution, LpStatus
from .simplex import solve_lp

LIMIT_TOL = 1e-7


class OpfModelError(ValueError):
    """The case cannot be posed as a DC-OPF linear program."""


def var_name(kind: str, *keys) -> str:
    return f"{kind}[{','.join(str(k) for k in keys)}]"


@dataclass
class NetworkVars:
    """Column/row indices for one copy of the network inside an LP."""

    theta: dict[int, int] = field(default_factory=dict)      # bus index -> column
    pg: dict[int, int] = field(default_factory=dict)         # gen index -> column
    epigraph: dict[int, int] = field(default_factory=dict)   # gen index -> column
    balance: list[int] = field(default_factory=list)         # eq row per bus
    flow_rows: dict[int, tuple[int, int]] = field(default_factory=dict)  # branch -> (upper, lower) in-rows


def check_opf_case(case: Case) -> None:
    if not np.any(case.bus_types == BusType.SLACK):
        raise OpfModelError("no slack bus: the angle reference is undefined")
    for k, g in enumerate(case.generators):
        if not g.status:
            continue
        if not (np.isfinite(g.pmin) and np.isfinite(g.pmax)):
            raise OpfModelError(f"generator {k + 1} has non-finite real power limits")
        if g.cost.kind is CostModel.POLYNOMIAL and g.cost.degree > 1:
            raise OpfModelError(
                f"generator {k + 1} has a quadratic cost; only linear and piecewise-linear costs are supported"
            )


def add_network(
    lp: LpBuilder,
    case: Case,
    dc: DCMatrices,
    pd: np.ndarray,
    keys: tuple = (),
    weight: float = 1.0,
    extra: Mapping[int, list[tuple[int, float]]] | None = None,
) -> NetworkVars:
    """Add angle and generator columns, nodal balance rows and flow limits.

    ``pd`` is the fixed real demand per bus (p.u., shunt draw excluded).
    ``extra`` maps a bus index to additional ``(column, coefficient)``
    injections, e.g. storage or renewable output. Costs are multiplied by
    ``weight`` (scenario probability).
    """
    base = case.base_mva
    out = NetworkVars()
    slack = case.bus_types == BusType.SLACK
    va0 = np.array([b.va for b in case.buses], dtype=float)
    ids = case.index.ids

    for i in range(case.n_bus):
        if not slack[i]:
            out.theta[i] = lp.add_var(var_name("theta", *keys, ids[i]), -np.inf, np.inf)

    for k, g in enumerate(case.generators):
        if not g.status:
            continue
        col = lp.add_var(var_name("pg", *keys, k + 1), g.pmin, g.pmax)
        out.pg[k] = col
        cost = g.cost
        if cost.kind is CostModel.POLYNOMIAL:
            coeffs = np.asarray(cost.coefficients, dtype=float)
            c1 = coeffs[-2] if len(coeffs) >= 2 else 0.0
            c0 = coeffs[-1] if len(coeffs) >= 1 else 0.0
            lp.c[col] += weight * c1 * base
            lp.offset += weight * c0
        else:
            xs, fs = cost.breakpoints()
            z = lp.add_var(var_name("cost", *keys, k + 1), -np.inf, np.inf, weight)
            out.epigraph[k] = z
            for s in range(len(xs) - 1):
                slope = (fs[s + 1] - fs[s]) / (xs[s + 1] - xs[s])
                lp.add_in({z: 1.0, col: -slope * base}, ">", fs[s] - slope * xs[s],
                          var_name("seg", *keys, k + 1, s + 1))

    bbus = dc.bbus.tocsr()
    for i in range(case.n_bus):
        terms: dict[int, float] = {}
        rhs = -pd[i] - case.gs[i] - dc.pbusinj[i]
        row = bbus.getrow(i)
        for j, val in zip(row.indices, row.data):
            if slack[j]:
                rhs -= val * va0[j]
            else:
                terms[out.theta[j]] = terms.get(out.theta[j], 0.0) + val
        for k, col in out.pg.items():
            if case.gen_bus[k] == i:
                terms[col] = terms.get(col, 0.0) - 1.0
        for col, coef in (extra or {}).get(i, ()):
            terms[col] = terms.get(col, 0.0) - coef
        out.balance.append(lp.add_eq(terms, rhs, var_name("balance", *keys, ids[i])))

    bf = dc.bf.tocsr()
    for l, br in enumerate(case.branches):
        if not br.status or br.rate_a <= 0:
            continue
        terms = {}
        offset = dc.pfinj[l]
        row = bf.getrow(l)
        for j, val in zip(row.indices, row.data):
            if slack[j]:
                offset += val * va0[j]
            else:
                terms[out.theta[j]] = val
        rate = br.rate_a
        up = lp.add_in(terms, "<", rate - offset, var_name("flow_max", *keys, l + 1))
        dn = lp.add_in({c: -v for c, v in terms.items()}, "<", rate + offset, var_name("flow_min", *keys, l + 1))
        out.flow_rows[l] = (up, dn)
    return out


def build_dcopf(case: Case) -> LinearProgram:
    """Single-period DC-OPF linear program (costs in $/h, powers in p.u.)."""
    lp, _ = _build(case)
    return lp


def _build(case: Case):
    check_opf_case(case)
    builder = LpBuilder()
    dc = make_bdc(case)
    nv = add_network(builder, case, dc, case.pd)
    return builder.build(), nv


@dataclass
class DispatchResult:
    status: LpStatus
    objective: float                 # $/h
    pg: np.ndarray                   # MW per generator (0 when out of service)
    flows: np.ndarray                # MW from-end per branch
    lmp: np.ndarray                  # $/MWh per bus
    theta: np.ndarray                # rad per bus
    binding: np.ndarray              # bool per branch, flow at its rating
    congestion: np.ndarray           # $/MWh saved per extra MW of rating, per branch
    max_violation: float             # MW, flows re-solved from the dispatch
    lp: LinearProgram
    solution: LpSolution
    case: Case

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    @property
    def total_generation(self) -> float:
        return float(self.pg.sum())


def run_dcopf(case: Case, injections: Mapping[int, float] | None = None) -> DispatchResult:
    """Solve the DC-OPF; ``injections`` adds fixed MW at external bus ids (e.g. wind)."""
    for bus_id, mw in (injections or {}).items():
        case = case.with_bus_injection(bus_id, mw / case.base_mva)
    lp, nv = _build(case)
    sol = solve_lp(lp)
    base = case.base_mva
    nb, nl, ng = case.n_bus, case.n_branch, case.n_gen
    pg = np.zeros(ng)
    theta = np.array([b.va for b in case.buses], dtype=float)
    flows = np.zeros(nl)
    lmp = np.full(nb, np.nan)
    congestion = np.zeros(nl)
    binding = np.zeros(nl, dtype=bool)
    violation = np.nan
    objective = sol.objective
    if sol.optimal:
        for k, col in nv.pg.items():
            pg[k] = sol.x[col] * base
        for i, col in nv.theta.items():
            theta[i] = sol.x[col]
        dc = make_bdc(case)
        flows = (dc.bf @ theta + dc.pfinj) * base
        lmp = -sol.eq_duals[nv.balance] / base
        for l, (up, dn) in nv.flow_rows.items():
            congestion[l] = -(sol.in_duals[up] + sol.in_duals[dn]) / base
            binding[l] = abs(abs(flows[l]) - case.branches[l].rate_a * base) <= LIMIT_TOL * base
        violation = _limit_violation(case, pg / base)
    return DispatchResult(
        status=sol.status, objective=objective, pg=pg, flows=flows, lmp=lmp, theta=theta,
        binding=binding, congestion=congestion, max_violation=violation, lp=lp, solution=sol, case=case,
    )


def _limit_violation(case: Case, pg_pu: np.ndarray) -> float:
    """Largest MW excess over rate_a after an independent DC power flow."""
    pf = solve_dc(case, pg=pg_pu)
    rate = np.array([br.rate_a for br in case.branches], dtype=float)
    rated = case.branch_on & (rate > 0)
    if not np.any(rated):
        return 0.0
    excess = np.abs(pf.sf.real[rated]) - rate[rated]
    return float(max(0.0, excess.max()) * case.base_mva)
