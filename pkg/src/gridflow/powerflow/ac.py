"""Newton-Raphson, Gauss-Seidel and fast-decoupled AC power flow."""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from .._kernels import PQ, PV, SLACK, gs_sweep
from .._linalg import SingularMatrixError, factorize
from ..admittance import build_system_matrices
from ..model import BusType, Case
from ._common import (
    Method,
    PFData,
    PowerFlowOptions,
    PowerFlowSolution,
    compute_jacobian,
    compute_mismatch,
    finalize,
    initial_voltage,
    prepare,
)

log = logging.getLogger(__name__)


class SingularJacobianError(SingularMatrixError):
    pass


def newton(d: PFData, vm, va, tol, max_iter):
    t = d.typing
    npvpq = len(t.pvpq)
    history = []
    converged = False
    it = 0
    while True:
        g = compute_mismatch(d, vm, va)
        history.append(g.norm)
        if g.norm <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        jac = compute_jacobian(d, vm, va)
        try:
            lu = factorize(jac, "Jacobian")
        except SingularMatrixError as exc:
            raise SingularJacobianError(str(exc)) from None
        dx = -lu.solve(g.vector)
        va[t.pvpq] += dx[:npvpq]
        vm[t.pq] += dx[npvpq:]
        it += 1
        log.debug("newton it %d: |g| = %.3e", it, history[-1])
    return vm, va, it, converged, history


def gauss_seidel(d: PFData, vm, va, tol, max_iter):
    t = d.typing
    kind = np.full(d.case.n_bus, PQ, dtype=np.int64)
    kind[t.pv] = PV
    kind[t.ref] = SLACK
    vset = vm.copy()
    v = vm * np.exp(1j * va)
    sspec = d.sbus.astype(complex)
    history = []
    converged = False
    it = 0
    while True:
        g = compute_mismatch(d, np.abs(v), np.angle(v))
        history.append(g.norm)
        if g.norm <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        gs_sweep(d.ybus, v, sspec, kind, vset)
        it += 1
    vm = np.abs(v)
    # keep reference angles exactly as specified
    va_out = np.angle(v)
    va_out[t.ref] = va[t.ref]
    return vm, va_out, it, converged, history


def fdlf_matrices(case: Case):
    """B' and B'' for the XB fast-decoupled scheme.

    B': no shunts, no line charging, unity taps, zero resistance.
    B'': phase shifts removed, everything else kept.
    """
    bp_case = case.replace(
        buses=tuple(replace(b, bs=0.0, gs=0.0) for b in case.buses),
        branches=tuple(replace(br, b=0.0, tap=1.0, r=0.0) for br in case.branches),
    )
    bpp_case = case.replace(branches=tuple(replace(br, shift=0.0) for br in case.branches))
    bp = -build_system_matrices(bp_case).ybus.imag
    bpp = -build_system_matrices(bpp_case).ybus.imag
    return bp.tocsr(), bpp.tocsr()


def fast_decoupled(d: PFData, vm, va, tol, max_iter):
    t = d.typing
    bp, bpp = fdlf_matrices(d.case)
    lu_p = factorize(bp[t.pvpq][:, t.pvpq], "B'")
    lu_q = factorize(bpp[t.pq][:, t.pq], "B''") if len(t.pq) else None
    history = []
    g = compute_mismatch(d, vm, va)
    history.append(g.norm)
    converged = g.norm <= tol
    half = 0
    while not converged and half < max_iter:
        if half % 2 == 0:
            if lu_p is not None:
                va[t.pvpq] -= lu_p.solve(g.gp / vm[t.pvpq])
        elif lu_q is not None:
            vm[t.pq] -= lu_q.solve(g.gq / vm[t.pq])
        half += 1
        g = compute_mismatch(d, vm, va)
        history.append(g.norm)
        converged = g.norm <= tol
    return vm, va, half, converged, history


_SOLVERS = {
    Method.NEWTON: newton,
    Method.GAUSS_SEIDEL: gauss_seidel,
    Method.FAST_DECOUPLED: fast_decoupled,
}


def _q_violation(sol: PowerFlowSolution, fixed: dict[int, float]):
    """Lowest-index PV bus whose generators exceed their reactive limits."""
    case = sol.case
    for bus in np.flatnonzero(sol.bus_types == BusType.PV):
        if bus in fixed:
            continue
        gens = np.flatnonzero(case.gen_on & (case.gen_bus == bus))
        qmax = sum(case.generators[k].qmax for k in gens)
        qmin = sum(case.generators[k].qmin for k in gens)
        q = sol.qg[gens].sum()
        if q > qmax + 1e-9:
            return bus, qmax
        if q < qmin - 1e-9:
            return bus, qmin
    return None


def solve(case: Case, options: PowerFlowOptions | None = None, **kwargs) -> PowerFlowSolution:
    """Solve the AC (or DC) power flow.

    Non-convergence is not an exception: the returned solution has
    ``converged=False`` and the mismatch history for diagnosis.
    """
    opts = options or PowerFlowOptions(**kwargs)
    if opts.method is Method.DC:
        from .dc import solve_dc

        return solve_dc(case)
    run = _SOLVERS[opts.method]
    fixed: dict[int, float] = {}
    d = prepare(case)
    vm, va = initial_voltage(case, d.typing, opts.flat_start)
    total_it = 0
    while True:
        vm, va, it, converged, history = run(d, vm, va, opts.tol, opts.max_iter)
        total_it += it
        sol = finalize(d, opts.method, vm, va, total_it, converged, history)
        if not (opts.enforce_q_limits and converged):
            return sol
        hit = _q_violation(sol, fixed)
        if hit is None:
            return sol
        bus, qlim = hit
        log.info("bus %d hit reactive limit %.4f, switching PV -> PQ", case.buses[bus].id, qlim)
        fixed[int(bus)] = float(qlim)
        d = prepare(case, fixed)
        if len(d.typing.ref) == 0:
            sol.converged = False
            return sol
        vm, va = vm.copy(), va.copy()
