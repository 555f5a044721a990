from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .._kernels import polar_partials
from ..admittance import build_system_matrices
from ..model import BusType, Case, connection_matrix


class Method(str, Enum):
    NEWTON = "newton"
    GAUSS_SEIDEL = "gs"
    FAST_DECOUPLED = "fdlf"
    DC = "dc"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        aliases = {
            "nr": cls.NEWTON, "newton-raphson": cls.NEWTON,
            "gauss-seidel": cls.GAUSS_SEIDEL, "gaussseidel": cls.GAUSS_SEIDEL,
            "fd": cls.FAST_DECOUPLED, "fast-decoupled": cls.FAST_DECOUPLED, "fastdecoupled": cls.FAST_DECOUPLED,
        }
        key = str(value).strip().lower()
        return aliases.get(key) or cls(key)


DEFAULT_MAX_ITER = {
    Method.NEWTON: 30,
    Method.GAUSS_SEIDEL: 1000,
    Method.FAST_DECOUPLED: 60,  # half-iterations
    Method.DC: 1,
}


@dataclass(frozen=True)
class PowerFlowOptions:
    method: Method = Method.NEWTON
    tol: float = 1e-8
    max_iter: int | None = None
    flat_start: bool = True
    enforce_q_limits: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter is None:
            object.__setattr__(self, "max_iter", DEFAULT_MAX_ITER[self.method])
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class PowerFlowSolution:
    case: Case
    method: Method
    vm: np.ndarray
    va: np.ndarray
    pg: np.ndarray
    qg: np.ndarray
    sf: np.ndarray
    st: np.ndarray
    iterations: int
    converged: bool
    mismatch_history: list[float] = field(default_factory=list)
    bus_types: np.ndarray | None = None

    @property
    def v(self) -> np.ndarray:
        return self.vm * np.exp(1j * self.va)

    @property
    def losses(self) -> np.ndarray:
        """Real power loss per branch, p.u."""
        return (self.sf + self.st).real

    @property
    def losses_mw(self) -> np.ndarray:
        return self.losses * self.case.base_mva

    @property
    def pg_slack(self) -> np.ndarray:
        """Total real generation at each slack bus, p.u."""
        ref = np.flatnonzero(self.bus_types == BusType.SLACK)
        on = self.case.gen_on
        return np.array([self.pg[on & (self.case.gen_bus == k)].sum() for k in ref])

    @property
    def mismatch(self) -> float:
        return self.mismatch_history[-1] if self.mismatch_history else float("nan")


class BusTyping:
    """Effective bus classification for a solve.

    A PV bus without an in-service generator is solved as PQ. ``fixed_q`` maps
    internal bus index -> total generator MVAr (p.u.) for buses switched to PQ
    by reactive limit enforcement.
    """

    def __init__(self, case: Case, fixed_q: dict[int, float] | None = None):
        types = case.bus_types.copy()
        has_gen = np.zeros(case.n_bus, dtype=bool)
        has_gen[case.gen_bus[case.gen_on]] = True
        types[(types == BusType.PV) & ~has_gen] = BusType.PQ
        self.fixed_q = dict(fixed_q or {})
        for k in self.fixed_q:
            types[k] = BusType.PQ
        self.types = types
        self.ref = np.flatnonzero(types == BusType.SLACK)
        self.pv = np.flatnonzero(types == BusType.PV)
        self.pq = np.flatnonzero(types == BusType.PQ)
        self.pvpq = np.r_[self.pv, self.pq]


@dataclass
class PFData:
    case: Case
    typing: BusTyping
    ybus: sp.csr_matrix
    yf: sp.csr_matrix
    yt: sp.csr_matrix
    sbus: np.ndarray  # specified net injection (generation - load), p.u.


def prepare(case: Case, fixed_q: dict[int, float] | None = None) -> PFData:
    typing = BusTyping(case, fixed_q)
    mats = build_system_matrices(case)
    return PFData(case, typing, mats.ybus, mats.yf, mats.yt, specified_injection(case, typing))


def specified_injection(case: Case, typing: BusTyping | None = None) -> np.ndarray:
    on = case.gen_on
    pg = np.array([g.pg for g in case.generators], dtype=float)
    qg = np.array([g.qg for g in case.generators], dtype=float)
    cg = connection_matrix(case)
    sg = np.where(on, pg + 1j * qg, 0.0) if case.n_gen else np.zeros(0, dtype=complex)
    sbus = cg @ sg - (case.pd + 1j * case.qd)
    if typing is not None:
        for k, q in typing.fixed_q.items():
            sbus[k] = sbus[k].real + 1j * (q - case.qd[k])
    return sbus


def initial_voltage(case: Case, typing: BusTyping, flat_start: bool = True):
    vm = np.array([b.vm for b in case.buses], dtype=float)
    va = np.array([b.va for b in case.buses], dtype=float)
    if flat_start:
        vm[:] = 1.0
        ref_angle = va[typing.ref[0]] if len(typing.ref) else 0.0
        va_ref = va[typing.ref].copy()
        va[:] = ref_angle
        va[typing.ref] = va_ref
    # voltage-controlled buses start at their setpoint
    for k, g in enumerate(case.generators):
        bus = case.gen_bus[k]
        if g.status and typing.types[bus] in (BusType.PV, BusType.SLACK):
            vm[bus] = g.vg
    return vm, va


@dataclass(frozen=True)
class Mismatch:
    """Power-balance residuals: computed injection + load - generation.

    ``gp`` covers buses ``pvpq`` (PV then PQ, internal indices), ``gq`` buses ``pq``.
    """

    gp: np.ndarray
    gq: np.ndarray
    pvpq: np.ndarray
    pq: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.r_[self.gp, self.gq]

    @property
    def norm(self) -> float:
        v = self.vector
        return float(np.max(np.abs(v))) if v.size else 0.0


def _data(case_or_data) -> PFData:
    return case_or_data if isinstance(case_or_data, PFData) else prepare(case_or_data)


def compute_mismatch(case, vm, va) -> Mismatch:
    """Residuals ``g(x) = S_bus(V) - S_spec`` restricted to the unknown equations.

    ``case`` may be a :class:`Case` or a prepared :class:`PFData`.
    """
    d = _data(case)
    v = np.asarray(vm) * np.exp(1j * np.asarray(va))
    g = v * np.conj(d.ybus @ v) - d.sbus
    t = d.typing
    return Mismatch(g.real[t.pvpq], g.imag[t.pq], t.pvpq, t.pq)


def compute_jacobian(case, vm, va) -> sp.csr_matrix:
    """Sparse Jacobian of :func:`compute_mismatch` w.r.t. ``[va[pvpq], vm[pq]]``."""
    d = _data(case)
    t = d.typing
    _, _, dp_dva, dp_dvm, dq_dva, dq_dvm = polar_partials(d.ybus, vm, va)
    j11 = dp_dva[t.pvpq][:, t.pvpq]
    j12 = dp_dvm[t.pvpq][:, t.pq]
    j21 = dq_dva[t.pq][:, t.pvpq]
    j22 = dq_dvm[t.pq][:, t.pq]
    n = len(t.pvpq) + len(t.pq)
    if n == 0:
        return sp.csr_matrix((0, 0))
    return sp.csr_matrix(sp.bmat([[j11, j12], [j21, j22]], format="csr"), shape=(n, n))


def branch_flows(case, vm, va):
    """Complex from/to end branch flows and per-branch real losses (p.u.)."""
    d = _data(case)
    v = np.asarray(vm) * np.exp(1j * np.asarray(va))
    c = d.case
    if c.n_branch == 0:
        empty = np.zeros(0, dtype=complex)
        return empty, empty, np.zeros(0)
    sf = v[c.f_bus] * np.conj(d.yf @ v)
    st = v[c.t_bus] * np.conj(d.yt @ v)
    return sf, st, (sf + st).real


def finalize(d: PFData, method, vm, va, iterations, converged, history) -> PowerFlowSolution:
    """Recover slack P and generator Q from the balance equations not solved for."""
    case, t = d.case, d.typing
    v = vm * np.exp(1j * va)
    sgen_bus = v * np.conj(d.ybus @ v) + (case.pd + 1j * case.qd)
    pg = np.array([g.pg for g in case.generators], dtype=float)
    qg = np.array([g.qg for g in case.generators], dtype=float)
    on = case.gen_on
    for bus in range(case.n_bus):
        gens = np.flatnonzero(on & (case.gen_bus == bus))
        if not len(gens):
            continue
        if t.types[bus] == BusType.SLACK:
            others = pg[gens[1:]].sum()
            pg[gens[0]] = sgen_bus[bus].real - others
        if bus in t.fixed_q:
            qg[gens] = t.fixed_q[bus] / len(gens)
            continue
        if t.types[bus] in (BusType.PV, BusType.SLACK):
            qg[gens] = sgen_bus[bus].imag / len(gens)
    pg[~on] = 0.0
    qg[~on] = 0.0
    sf, st, _ = branch_flows(d, vm, va)
    return PowerFlowSolution(
        case=case, method=method, vm=vm, va=va, pg=pg, qg=qg, sf=sf, st=st,
        iterations=iterations, converged=converged, mismatch_history=list(history),
        bus_types=t.types.copy(),
    )
