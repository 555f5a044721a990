"""Linearised (DC) power flow: lossless, unity voltage, small angles."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .._linalg import SingularMatrixError, factorize
from ..model import BusType, Case, connection_matrix
from ._common import Method, PowerFlowSolution


class DCMatrices(NamedTuple):
    bbus: sp.csr_matrix     # n_bus x n_bus
    bf: sp.csr_matrix       # n_branch x n_bus, from-end flow per unit angle
    pbusinj: np.ndarray     # bus injection offsets from phase shifters
    pfinj: np.ndarray       # branch flow offsets from phase shifters


def make_bdc(case: Case) -> DCMatrices:
    nb, nl = case.n_bus, case.n_branch
    on = case.branch_on
    x = np.array([br.x for br in case.branches], dtype=float)
    tap = np.array([br.tap if br.tap != 0 else 1.0 for br in case.branches], dtype=float)
    shift = np.array([br.shift for br in case.branches], dtype=float)
    if np.any(on & (x == 0.0)):
        k = int(np.flatnonzero(on & (x == 0.0))[0])
        raise ValueError(f"branch {k + 1} has zero series reactance")
    b = np.zeros(nl)
    b[on] = 1.0 / (x[on] * tap[on])
    rows = np.arange(nl)
    cft = sp.csr_matrix(
        (np.r_[np.ones(nl), -np.ones(nl)], (np.r_[rows, rows], np.r_[case.f_bus, case.t_bus])),
        shape=(nl, nb),
    )
    bf = sp.csr_matrix(sp.diags(b) @ cft)
    bbus = sp.csr_matrix(cft.T @ bf)
    bbus.eliminate_zeros()
    pfinj = -b * shift
    pbusinj = cft.T @ pfinj
    return DCMatrices(bbus, bf, pbusinj, pfinj)


def dc_bus_injection(case: Case, pg=None) -> np.ndarray:
    """Specified real injection ``C_g P_g - P_d - G_s`` (p.u.)."""
    if pg is None:
        pg = np.array([g.pg for g in case.generators], dtype=float)
    pg = np.where(case.gen_on, pg, 0.0) if case.n_gen else np.zeros(0)
    return connection_matrix(case) @ pg - case.pd - case.gs


def solve_dc(case: Case, pg=None) -> PowerFlowSolution:
    """Solve ``B theta = P - P_shift`` with slack angles fixed.

    Raises :class:`SingularMatrixError` for an island without a slack bus.
    """
    m = make_bdc(case)
    types = case.bus_types
    ref = np.flatnonzero(types == BusType.SLACK)
    if len(ref) == 0:
        raise SingularMatrixError("singular B: no slack bus")
    nonref = np.flatnonzero(types != BusType.SLACK)
    va0 = np.array([b.va for b in case.buses], dtype=float)
    pbus = dc_bus_injection(case, pg)

    theta = np.zeros(case.n_bus)
    theta[ref] = va0[ref]
    if len(nonref):
        bb = m.bbus[nonref]
        rhs = pbus[nonref] - m.pbusinj[nonref] - bb[:, ref] @ theta[ref]
        lu = factorize(bb[:, nonref], "B")
        theta[nonref] = lu.solve(rhs)

    flows = m.bf @ theta + m.pfinj
    p_inj = m.bbus @ theta + m.pbusinj  # realised net injection per bus

    pgen = np.array([g.pg for g in case.generators], dtype=float) if pg is None else np.array(pg, dtype=float)
    on = case.gen_on
    for k in ref:
        gens = np.flatnonzero(on & (case.gen_bus == k))
        if len(gens):
            pgen[gens[0]] = p_inj[k] + case.pd[k] + case.gs[k] - pgen[gens[1:]].sum()
    if case.n_gen:
        pgen[~on] = 0.0
    qg = np.zeros(case.n_gen)
    return PowerFlowSolution(
        case=case, method=Method.DC, vm=np.ones(case.n_bus), va=theta, pg=pgen, qg=qg,
        sf=flows.astype(complex), st=(-flows).astype(complex), iterations=1, converged=True,
        mismatch_history=[float(np.max(np.abs(p_inj[nonref] - pbus[nonref]))) if len(nonref) else 0.0],
        bus_types=types.copy(),
    )
