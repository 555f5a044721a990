"""Linear program container, incremental builder and text export."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LinearProgram:
    """``min c'x + offset`` s.t. ``A_eq x = b_eq``, ``A_in x (<=|>=) b_in``, ``lb <= x <= ub``.

    ``sense`` holds ``"<"`` or ``">"`` per inequality row.
    """

    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    a_eq: sp.csr_matrix
    b_eq: np.ndarray
    a_in: sp.csr_matrix
    b_in: np.ndarray
    sense: np.ndarray
    var_names: list[str] = field(default_factory=list)
    eq_names: list[str] = field(default_factory=list)
    in_names: list[str] = field(default_factory=list)
    offset: float = 0.0

    @property
    def n_var(self) -> int:
        return len(self.c)

    @property
    def n_eq(self) -> int:
        return len(self.b_eq)

    @property
    def n_in(self) -> int:
        return len(self.b_in)

    def check(self):
        n = self.n_var
        for name, arr in (("lb", self.lb), ("ub", self.ub)):
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
        if self.a_eq.shape != (self.n_eq, n):
            raise ValueError(f"A_eq has shape {self.a_eq.shape}, expected ({self.n_eq}, {n})")
        if self.a_in.shape != (self.n_in, n):
            raise ValueError(f"A_in has shape {self.a_in.shape}, expected ({self.n_in}, {n})")
        if self.sense.shape != (self.n_in,):
            raise ValueError("sense must have one entry per inequality row")
        if not np.all(np.isin(self.sense, ("<", ">"))):
            raise ValueError("sense entries must be '<' or '>'")
        if np.any(self.lb > self.ub):
            k = int(np.flatnonzero(self.lb > self.ub)[0])
            raise ValueError(f"variable {self.var_name(k)} has lb > ub")
        if np.any(np.isnan(self.c)) or np.any(np.isinf(self.c)):
            raise ValueError("objective coefficients must be finite")

    def var_name(self, k: int) -> str:
        return self.var_names[k] if k < len(self.var_names) else f"x{k}"

    def var_index(self, name: str) -> int:
        return self.var_names.index(name)

    def objective(self, x) -> float:
        return float(self.c @ x + self.offset)

    def permuted(self, var_perm=None, eq_perm=None, in_perm=None) -> "LinearProgram":
        """Same problem with variables/rows reordered (used for invariance checks)."""
        n = self.n_var
        vp = np.arange(n) if var_perm is None else np.asarray(var_perm)
        ep = np.arange(self.n_eq) if eq_perm is None else np.asarray(eq_perm)
        ip = np.arange(self.n_in) if in_perm is None else np.asarray(in_perm)
        names = [self.var_name(k) for k in vp]
        return LinearProgram(
            c=self.c[vp], lb=self.lb[vp], ub=self.ub[vp],
            a_eq=self.a_eq[ep][:, vp], b_eq=self.b_eq[ep],
            a_in=self.a_in[ip][:, vp], b_in=self.b_in[ip], sense=self.sense[ip],
            var_names=names,
            eq_names=[self.eq_names[k] for k in ep] if self.eq_names else [],
            in_names=[self.in_names[k] for k in ip] if self.in_names else [],
            offset=self.offset,
        )

    def scaled_costs(self, factor: float) -> "LinearProgram":
        return LinearProgram(
            c=self.c * factor, lb=self.lb, ub=self.ub, a_eq=self.a_eq, b_eq=self.b_eq,
            a_in=self.a_in, b_in=self.b_in, sense=self.sense, var_names=self.var_names,
            eq_names=self.eq_names, in_names=self.in_names, offset=self.offset * factor,
        )


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    eq_duals: np.ndarray
    in_duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class LpBuilder:
    """Accumulate named variables and rows, then :meth:`build` a :class:`LinearProgram`."""

    def __init__(self):
        self.c: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.names: list[str] = []
        self._eq = ([], [], [])  # rows, cols, vals
        self._in = ([], [], [])
        self.b_eq: list[float] = []
        self.b_in: list[float] = []
        self.sense: list[str] = []
        self.eq_names: list[str] = []
        self.in_names: list[str] = []
        self.offset = 0.0

    def add_var(self, name, lb=0.0, ub=math.inf, cost=0.0) -> int:
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.c.append(float(cost))
        return len(self.names) - 1

    def add_eq(self, terms: dict[int, float] | list[tuple[int, float]], rhs: float, name="") -> int:
        return self._add(self._eq, self.b_eq, self.eq_names, terms, rhs, name)

    def add_in(self, terms, sense: str, rhs: float, name="") -> int:
        if sense not in ("<", ">"):
            raise ValueError(f"sense must be '<' or '>', got {sense!r}")
        self.sense.append(sense)
        return self._add(self._in, self.b_in, self.in_names, terms, rhs, name)

    @staticmethod
    def _add(store, rhs_list, names, terms, rhs, name):
        row = len(rhs_list)
        items = terms.items() if isinstance(terms, dict) else terms
        for col, val in items:
            if val != 0.0:
                store[0].append(row)
                store[1].append(col)
                store[2].append(float(val))
        rhs_list.append(float(rhs))
        names.append(name)
        return row

    def build(self) -> LinearProgram:
        n = len(self.names)

        def mat(store, m):
            a = sp.coo_matrix((store[2], (store[0], store[1])), shape=(m, n)).tocsr()
            a.sum_duplicates()
            return a

        lp = LinearProgram(
            c=np.array(self.c, dtype=float), lb=np.array(self.lb, dtype=float),
            ub=np.array(self.ub, dtype=float),
            a_eq=mat(self._eq, len(self.b_eq)), b_eq=np.array(self.b_eq, dtype=float),
            a_in=mat(self._in, len(self.b_in)), b_in=np.array(self.b_in, dtype=float),
            sense=np.array(self.sense, dtype="<U1"),
            var_names=list(self.names), eq_names=list(self.eq_names), in_names=list(self.in_names),
            offset=self.offset,
        )
        lp.check()
        return lp


def _num(v: float) -> str:
    return f"{v:.10f}".rstrip("0").rstrip(".") if v != 0 else "0"


def export_lp(lp: LinearProgram) -> str:
    """CPLEX-LP text with fixed-point numbers; readable by HiGHS, GLPK, CBC."""

    def name(k):
        return lp.var_name(k).replace("[", "(").replace("]", ")").replace(",", "_")

    def expr(a_row):
        a_row = a_row.tocoo()
        parts = []
        for col, val in sorted(zip(a_row.col, a_row.data)):
            sign = "-" if val < 0 else "+"
            parts.append(f"{sign} {_num(abs(val))} {name(col)}")
        return " ".join(parts) if parts else "0 " + name(0)

    out = ["\\ exported by gridflow", "Minimize", " obj: " + expr(sp.csr_matrix(lp.c.reshape(1, -1))), "Subject To"]
    for i in range(lp.n_eq):
        out.append(f" e{i}: {expr(lp.a_eq[i])} = {_num(lp.b_eq[i])}")
    for i in range(lp.n_in):
        op = "<=" if lp.sense[i] == "<" else ">="
        out.append(f" i{i}: {expr(lp.a_in[i])} {op} {_num(lp.b_in[i])}")
    out.append("Bounds")
    for k in range(lp.n_var):
        lo, hi = lp.lb[k], lp.ub[k]
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" {name(k)} free")
        else:
            lo_s = "-inf" if math.isinf(lo) else _num(lo)
            hi_s = "+inf" if math.isinf(hi) else _num(hi)
            out.append(f" {lo_s} <= {name(k)} <= {hi_s}")
    out.append("End")
    return "\n".join(out) + "\n"
