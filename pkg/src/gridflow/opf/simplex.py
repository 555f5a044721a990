"""Bounded-variable revised simplex.

Two phases with a slack-or-artificial crash basis. The basis is held as a
sparse LU factorization plus a product-form eta file, refactorized every
``REFACTOR_EVERY`` pivots. Dantzig pricing, falling back to Bland's rule
during long runs of degenerate pivots. Pricing is a full pass over the
columns each iteration, which keeps it to desk-scale problems (a few
thousand rows).
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .._kernels import eta_btran, eta_ftran
from .lp import LinearProgram, LpSolution, LpStatus

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
BLAND_AFTER = 200
MAX_ITER = 1_000_000
REFACTOR_EVERY = 64

BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3


class _Simplex:
    """Working state: sparse ``A`` (CSC), factored basis, values and bound status."""

    def __init__(self, a, b, lb, ub, max_iter):
        self.a = sp.csc_matrix(a)
        self.at = self.a.T.tocsr()
        self.b = b
        self.lb = lb
        self.ub = ub
        self.m, self.n = self.a.shape
        self.max_iter = max_iter
        self.iterations = 0
        self.eta_rows = np.zeros(REFACTOR_EVERY, dtype=np.int64)
        self.etas = np.zeros((REFACTOR_EVERY, self.m))
        self.n_eta = 0
        self.lu = None

    def refactor(self):
        self.n_eta = 0
        if self.m == 0:
            return
        bmat = sp.csc_matrix(self.a[:, self.basis])
        self.lu = splu(bmat, permc_spec="COLAMD", diag_pivot_thresh=1.0)
        xn = np.where(self.state == BASIC, 0.0, self.x)
        self.x[self.basis] = self.lu.solve(self.b - self.a @ xn)

    def ftran(self, v) -> np.ndarray:
        w = self.lu.solve(v)
        eta_ftran(w, self.eta_rows, self.etas, self.n_eta)
        return w

    def btran(self, c) -> np.ndarray:
        u = np.array(c, dtype=float)
        eta_btran(u, self.eta_rows, self.etas, self.n_eta)
        return self.lu.solve(u, trans="T")

    def column(self, q) -> np.ndarray:
        v = np.zeros(self.m)
        lo, hi = self.a.indptr[q], self.a.indptr[q + 1]
        v[self.a.indices[lo:hi]] = self.a.data[lo:hi]
        return self.ftran(v)

    def push_eta(self, r, alpha):
        self.eta_rows[self.n_eta] = r
        self.etas[self.n_eta] = alpha
        self.n_eta += 1

    def duals(self, cost):
        y = self.btran(cost[self.basis]) if self.m else np.zeros(0)
        return y, cost - self.at @ y

    def run(self, cost) -> LpStatus:
        tol = OPT_TOL * max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)
        movable = self.lb < self.ub
        stall = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            if self.n_eta >= REFACTOR_EVERY:
                self.refactor()
            y, d = self.duals(cost)
            st = self.state
            eligible = movable & (
                ((st == AT_LOWER) & (d < -tol))
                | ((st == AT_UPPER) & (d > tol))
                | ((st == FREE) & (np.abs(d) > tol))
            )
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.column(q) if self.m else np.zeros(0)
            rate = -direction * alpha
            xb = self.x[self.basis]
            lbb, ubb = self.lb[self.basis], self.ub[self.basis]
            limits = np.full(self.m, np.inf)
            dec = rate < -PIVOT_TOL
            inc = rate > PIVOT_TOL
            with np.errstate(invalid="ignore"):
                limits[dec] = (xb[dec] - lbb[dec]) / -rate[dec]
                limits[inc] = (ubb[inc] - xb[inc]) / rate[inc]
            limits = np.where(np.isnan(limits), np.inf, np.maximum(limits, 0.0))
            theta_b = float(limits.min()) if self.m else np.inf
            theta_flip = self.ub[q] - self.lb[q]

            if not np.isfinite(theta_b) and not np.isfinite(theta_flip):
                return LpStatus.UNBOUNDED

            self.iterations += 1
            if theta_flip <= theta_b:
                theta = theta_flip
                self.x[q] += direction * theta
                self.state[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[self.basis] = xb + rate * theta
            else:
                theta = theta_b
                ties = np.flatnonzero(limits <= theta_b + 1e-12)
                if bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(alpha[ties]))])
                leaving = int(self.basis[r])
                self.x[self.basis] = xb + rate * theta
                self.x[q] += direction * theta
                if rate[r] < 0:
                    self.state[leaving] = AT_LOWER
                    self.x[leaving] = self.lb[leaving]
                else:
                    self.state[leaving] = AT_UPPER
                    self.x[leaving] = self.ub[leaving]
                self.basis[r] = q
                self.state[q] = BASIC
                self.push_eta(r, alpha)

            if theta * abs(d[q]) <= 1e-12 * max(1.0, abs(d[q])):
                stall += 1
                if stall > BLAND_AFTER and not bland:
                    log.debug("switching to Bland's rule after %d stalled pivots", stall)
                    bland = True
            else:
                stall = 0
                bland = False


def _initial_point(lb, ub):
    state = np.where(np.isfinite(lb), AT_LOWER, np.where(np.isfinite(ub), AT_UPPER, FREE))
    x = np.where(state == AT_LOWER, lb, np.where(state == AT_UPPER, ub, 0.0))
    return state, x


def solve_lp(lp: LinearProgram, max_iter: int = MAX_ITER) -> LpSolution:
    lp.check()
    n, m_eq, m_in = lp.n_var, lp.n_eq, lp.n_in
    m = m_eq + m_in
    a_struct = sp.vstack([lp.a_eq, lp.a_in], format="csc") if m else sp.csc_matrix((0, n))
    slack = sp.csc_matrix((np.ones(m_in), (m_eq + np.arange(m_in), np.arange(m_in))), shape=(m, m_in))
    is_le = lp.sense == "<"
    lb = np.r_[lp.lb, np.where(is_le, 0.0, -np.inf)]
    ub = np.r_[lp.ub, np.where(is_le, np.inf, 0.0)]
    b = np.r_[lp.b_eq, lp.b_in]

    # crash basis: a slack where its row is already satisfied, else a signed artificial
    state, x = _initial_point(lb, ub)
    x[n:] = 0.0
    a0 = sp.hstack([a_struct, slack], format="csc")
    resid = b - a0 @ x
    use_slack = np.zeros(m, dtype=bool)
    use_slack[m_eq:] = np.where(is_le, resid[m_eq:] >= 0, resid[m_eq:] <= 0)
    sigma = np.where(resid < 0, -1.0, 1.0)
    a = sp.hstack([a0, sp.diags(sigma, format="csc")], format="csc")
    total = n + m_in + m
    art = np.arange(n + m_in, total)
    lb = np.r_[lb, np.zeros(m)]
    ub = np.r_[ub, np.where(use_slack, 0.0, np.inf)]
    state = np.r_[state, np.full(m, AT_LOWER)]
    x = np.r_[x, np.zeros(m)]
    basis = art.copy()
    rows_slack = np.flatnonzero(use_slack)
    basis[rows_slack] = n + rows_slack - m_eq
    x[basis] = np.where(use_slack, resid, np.abs(resid))
    state[basis] = BASIC

    sx = _Simplex(a, b, lb, ub, max_iter)
    sx.x, sx.state, sx.basis = x, state, basis
    sx.refactor()

    phase1 = np.zeros(total)
    phase1[art] = 1.0
    status = sx.run(phase1)
    if status is LpStatus.ITERATION_LIMIT:
        return _result(lp, sx, status, np.zeros(total), "iteration cap reached in phase 1")
    sx.refactor()
    infeas = float(np.abs(sx.x[art]).sum())
    if infeas > FEAS_TOL * max(1.0, float(np.max(np.abs(b))) if b.size else 1.0):
        return _result(lp, sx, LpStatus.INFEASIBLE, np.zeros(total), f"phase 1 infeasibility {infeas:.3e}")

    # artificials are pinned at zero for phase 2
    sx.ub[art] = 0.0
    nonbasic = sx.state[art] != BASIC
    sx.state[art[nonbasic]] = AT_LOWER
    sx.x[art[nonbasic]] = 0.0

    cost = np.r_[lp.c, np.zeros(m_in + m)]
    status = sx.run(cost)
    sx.refactor()
    msg = {LpStatus.UNBOUNDED: "objective unbounded below",
           LpStatus.ITERATION_LIMIT: "iteration cap reached in phase 2"}.get(status, "")
    return _result(lp, sx, status, cost, msg)


def _result(lp, sx, status, cost, message) -> LpSolution:
    n, m_eq = lp.n_var, lp.n_eq
    x = sx.x[:n].copy()
    if status is LpStatus.OPTIMAL:
        y, d = sx.duals(cost)
    else:
        y, d = np.zeros(sx.m), np.zeros(sx.n)
    return LpSolution(
        status=status, x=x,
        objective=lp.objective(x) if status is LpStatus.OPTIMAL else float("nan"),
        eq_duals=y[:m_eq].copy(), in_duals=y[m_eq:].copy(), reduced_costs=d[:n].copy(),
        iterations=sx.iterations, message=message,
    )


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    """Lagrangian dual bound from the reported row duals and reduced costs."""
    d = sol.reduced_costs
    lo = np.where(np.isfinite(lp.lb), lp.lb, 0.0)
    hi = np.where(np.isfinite(lp.ub), lp.ub, 0.0)
    bound_term = np.where(d > 0, d * lo, d * hi)
    return float(lp.b_eq @ sol.eq_duals + lp.b_in @ sol.in_duals + bound_term.sum() + lp.offset)
