"""In-memory network representation.

All power quantities are stored in per-unit on ``Case.base_mva``; angles are
radians. Cost coefficients stay in $-per-MW units (see :class:`GenCost`).
Conversion to and from MW/degrees happens in :mod:`gridflow.caseio`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class BusType(IntEnum):
    PQ = 1
    PV = 2
    SLACK = 3


class CostModel(IntEnum):
    PIECEWISE_LINEAR = 1
    POLYNOMIAL = 2


@dataclass(frozen=True)
class GenCost:
    """Generator cost curve.

    For ``POLYNOMIAL`` the coefficients are highest order first, as in the
    MATPOWER gencost table: ``(c2, c1, c0)`` means ``c2*P^2 + c1*P + c0`` with
    ``P`` in MW and the result in $/h. For ``PIECEWISE_LINEAR`` they are
    ``(p1, f1, p2, f2, ...)`` breakpoints in MW and $/h.
    """

    kind: CostModel = CostModel.POLYNOMIAL
    coefficients: tuple[float, ...] = (0.0,)
    startup: float = 0.0
    shutdown: float = 0.0

    @property
    def degree(self) -> int:
        if self.kind is not CostModel.POLYNOMIAL:
            return 1
        coeffs = list(self.coefficients)
        while len(coeffs) > 1 and coeffs[0] == 0.0:
            coeffs.pop(0)
        return len(coeffs) - 1

    def breakpoints(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.coefficients, dtype=float)
        return c[0::2], c[1::2]

    def __call__(self, p_mw):
        p_mw = np.asarray(p_mw, dtype=float)
        if self.kind is CostModel.POLYNOMIAL:
            return np.polyval(np.asarray(self.coefficients, dtype=float), p_mw)
        xs, fs = self.breakpoints()
        # extrapolate linearly beyond the end segments
        slopes = np.diff(fs) / np.diff(xs)
        k = np.clip(np.searchsorted(xs, p_mw, side="right") - 1, 0, len(slopes) - 1)
        return fs[k] + slopes[k] * (p_mw - xs[k])


@dataclass(frozen=True)
class Bus:
    id: int
    bus_type: BusType = BusType.PQ
    pd: float = 0.0
    qd: float = 0.0
    gs: float = 0.0
    bs: float = 0.0
    area: int = 1
    vm: float = 1.0
    va: float = 0.0
    base_kv: float = 0.0
    zone: int = 1
    vmax: float = 1.1
    vmin: float = 0.9


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float = 0.0
    x: float = 0.0
    b: float = 0.0
    rate_a: float = 0.0
    rate_b: float = 0.0
    rate_c: float = 0.0
    tap: float = 1.0
    shift: float = 0.0
    status: bool = True


@dataclass(frozen=True)
class Generator:
    bus: int
    pg: float = 0.0
    qg: float = 0.0
    qmax: float = math.inf
    qmin: float = -math.inf
    vg: float = 1.0
    mbase: float = 100.0
    status: bool = True
    pmax: float = math.inf
    pmin: float = 0.0
    ramp: float = math.inf
    cost: GenCost = field(default_factory=GenCost)

    @property
    def is_dispatchable_load(self) -> bool:
        return self.pmin < 0.0 and self.pmax <= 0.0


@dataclass(frozen=True)
class StorageUnit:
    bus: int
    e_max: float
    e_initial: float = 0.0
    p_charge_max: float = 0.0
    p_discharge_max: float = 0.0
    eta_charge: float = 1.0
    eta_discharge: float = 1.0


class UnknownBusError(KeyError):
    """A bus id was referenced that the case does not contain."""


@dataclass(frozen=True)
class IndexMap:
    """Bijection between external bus ids and dense internal indices (file order)."""

    ids: tuple[int, ...]

    @cached_property
    def _lookup(self) -> dict[int, int]:
        return {bid: k for k, bid in enumerate(self.ids)}

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, bus_id: int) -> int:
        try:
            return self._lookup[int(bus_id)]
        except KeyError:
            raise UnknownBusError(f"unknown bus id {bus_id}") from None

    def __contains__(self, bus_id) -> bool:
        return int(bus_id) in self._lookup

    def external(self, index: int) -> int:
        return self.ids[index]

    def map(self, bus_ids) -> np.ndarray:
        return np.array([self[b] for b in bus_ids], dtype=np.int64)

    def as_dict(self) -> dict[int, int]:
        return dict(self._lookup)


@dataclass(frozen=True)
class Case:
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...] = ()
    generators: tuple[Generator, ...] = ()
    storage: tuple[StorageUnit, ...] = ()
    name: str = "case"

    def __post_init__(self):
        for attr in ("buses", "branches", "generators", "storage"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    @property
    def n_gen(self) -> int:
        return len(self.generators)

    @cached_property
    def index(self) -> IndexMap:
        return internal_index(self)

    def replace(self, **changes) -> "Case":
        return replace(self, **changes)

    def with_bus_injection(self, bus_id: int, p: float, q: float = 0.0) -> "Case":
        """Return a copy with a fixed extra injection ``p + jq`` (p.u.) at ``bus_id``.

        Modelled as negative load so generator and variable counts are unchanged.
        """
        k = self.index[bus_id]
        bus = self.buses[k]
        buses = list(self.buses)
        buses[k] = replace(bus, pd=bus.pd - p, qd=bus.qd - q)
        return self.replace(buses=tuple(buses))

    # array views used by the solvers
    @cached_property
    def bus_types(self) -> np.ndarray:
        return np.array([int(b.bus_type) for b in self.buses], dtype=np.int64)

    @cached_property
    def pd(self) -> np.ndarray:
        return np.array([b.pd for b in self.buses], dtype=float)

    @cached_property
    def qd(self) -> np.ndarray:
        return np.array([b.qd for b in self.buses], dtype=float)

    @cached_property
    def gs(self) -> np.ndarray:
        return np.array([b.gs for b in self.buses], dtype=float)

    @cached_property
    def bs(self) -> np.ndarray:
        return np.array([b.bs for b in self.buses], dtype=float)

    @cached_property
    def gen_bus(self) -> np.ndarray:
        return self.index.map([g.bus for g in self.generators])

    @cached_property
    def gen_on(self) -> np.ndarray:
        return np.array([bool(g.status) for g in self.generators], dtype=bool)

    @cached_property
    def branch_on(self) -> np.ndarray:
        return np.array([bool(br.status) for br in self.branches], dtype=bool)

    @cached_property
    def f_bus(self) -> np.ndarray:
        return self.index.map([br.from_bus for br in self.branches])

    @cached_property
    def t_bus(self) -> np.ndarray:
        return self.index.map([br.to_bus for br in self.branches])


def internal_index(case: Case) -> IndexMap:
    ids = tuple(int(b.id) for b in case.buses)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate bus ids; run validate() first")
    return IndexMap(ids)


def connection_matrix(case: Case, in_service_only: bool = False) -> sp.csr_matrix:
    """Generator connection matrix ``C_g`` (n_bus x n_gen, one 1 per column)."""
    gens = case.generators
    cols = np.arange(len(gens))
    rows = case.gen_bus
    if in_service_only:
        keep = case.gen_on
        rows, cols = rows[keep], cols[keep]
    return sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(case.n_bus, len(gens))
    )


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    fatal: bool = False


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    def add(self, code, message, fatal=False):
        self.issues.append(Issue(code, message, fatal))

    @property
    def fatal(self) -> list[Issue]:
        return [i for i in self.issues if i.fatal]

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def __bool__(self):
        return bool(self.issues)

    def __iter__(self):
        return iter(self.issues)

    def __len__(self):
        return len(self.issues)


def _finite(*values) -> bool:
    return all(math.isfinite(v) for v in values)


def islands(case: Case, ids: list[int] | None = None) -> list[list[int]]:
    """Connected components over in-service branches, as lists of internal indices."""
    n = case.n_bus
    lookup = {bid: k for k, bid in enumerate(ids or [b.id for b in case.buses])}
    f, t = [], []
    for br in case.branches:
        if br.status and br.from_bus in lookup and br.to_bus in lookup:
            f.append(lookup[br.from_bus])
            t.append(lookup[br.to_bus])
    adj = sp.csr_matrix((np.ones(len(f)), (f, t)), shape=(n, n))
    count, labels = connected_components(adj, directed=False)
    return [list(np.flatnonzero(labels == k)) for k in range(count)]


def validate(case: Case) -> ValidationReport:
    """Collect every invariant violation; an empty report means solvable-ready."""
    rep = ValidationReport()
    if not case.buses:
        rep.add("no buses", "case has no buses", fatal=True)
        return rep
    if not (case.base_mva > 0 and math.isfinite(case.base_mva)):
        rep.add("bad base", f"base_mva must be positive, got {case.base_mva}", fatal=True)

    ids = [b.id for b in case.buses]
    seen = set()
    for bid in ids:
        if bid in seen:
            rep.add("duplicate bus id", f"bus id {bid} appears more than once", fatal=True)
        seen.add(bid)

    for b in case.buses:
        if b.bus_type not in (BusType.PQ, BusType.PV, BusType.SLACK):
            rep.add("bad bus type", f"bus {b.id}: unknown type {b.bus_type}", fatal=True)
        if not _finite(b.pd, b.qd, b.gs, b.bs, b.vm, b.va):
            rep.add("non-finite bus data", f"bus {b.id}: non-finite load/shunt/voltage", fatal=True)
        if b.vmin > b.vmax:
            rep.add("voltage limits", f"bus {b.id}: vmin {b.vmin} > vmax {b.vmax}")

    for k, br in enumerate(case.branches, start=1):
        where = f"branch {k} ({br.from_bus}-{br.to_bus})"
        for end in (br.from_bus, br.to_bus):
            if end not in seen:
                rep.add("unknown bus", f"{where}: references unknown bus {end}", fatal=True)
        if br.from_bus == br.to_bus:
            rep.add("self loop", f"{where}: from and to bus are the same", fatal=True)
        if br.status and br.x == 0.0:
            rep.add("zero series reactance", f"{where}: x = 0", fatal=True)
        if br.tap < 0:
            rep.add("negative tap", f"{where}: tap {br.tap} < 0", fatal=True)
        if not _finite(br.r, br.x, br.b, br.tap, br.shift):
            rep.add("non-finite branch data", f"{where}: non-finite parameter", fatal=True)
        if br.rate_a < 0:
            rep.add("negative rating", f"{where}: rate_a {br.rate_a} < 0")

    for k, g in enumerate(case.generators, start=1):
        where = f"generator {k} at bus {g.bus}"
        if g.bus not in seen:
            rep.add("unknown bus", f"{where}: references unknown bus", fatal=True)
        if g.pmin > g.pmax:
            rep.add("gen p limits", f"{where}: pmin {g.pmin} > pmax {g.pmax}", fatal=True)
        if g.qmin > g.qmax:
            rep.add("gen q limits", f"{where}: qmin {g.qmin} > qmax {g.qmax}", fatal=True)
        if g.ramp < 0:
            rep.add("negative ramp", f"{where}: ramp {g.ramp} < 0", fatal=True)
        c = g.cost
        if c.kind is CostModel.POLYNOMIAL and c.degree > 2:
            rep.add("cost degree", f"{where}: polynomial cost degree {c.degree} > 2", fatal=True)
        if c.kind is CostModel.PIECEWISE_LINEAR:
            xs, _ = c.breakpoints()
            if len(xs) < 2 or np.any(np.diff(xs) <= 0):
                rep.add("cost breakpoints", f"{where}: breakpoints not strictly increasing", fatal=True)

    for k, s in enumerate(case.storage, start=1):
        where = f"storage {k} at bus {s.bus}"
        if s.bus not in seen:
            rep.add("unknown bus", f"{where}: references unknown bus", fatal=True)
        if not 0.0 <= s.e_initial <= s.e_max:
            rep.add("storage energy", f"{where}: e_initial outside [0, e_max]", fatal=True)
        if s.p_charge_max < 0 or s.p_discharge_max < 0:
            rep.add("storage rate", f"{where}: negative rate limit", fatal=True)
        if not (0 < s.eta_charge <= 1 and 0 < s.eta_discharge <= 1):
            rep.add("storage efficiency", f"{where}: efficiency outside (0, 1]", fatal=True)

    if len(seen) == len(ids):
        for island in islands(case, ids):
            slacks = [ids[k] for k in island if case.buses[k].bus_type == BusType.SLACK]
            members = ", ".join(str(ids[k]) for k in island[:6])
            if len(slacks) > 1:
                rep.add("multiple slack", f"island {{{members}}} has slack buses {slacks}", fatal=True)
            elif not slacks:
                rep.add("no slack", f"island {{{members}}} has no slack bus", fatal=True)

    return rep
