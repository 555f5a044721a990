"""Read and write cases as MATPOWER-style matrix text or JSON.

MatrixText is the literal-matrix subset of a MATPOWER case file::

    function mpc = case3
    mpc.version = '2';
    mpc.baseMVA = 100;
    mpc.bus = [
        1  3  0  0  0  0  1  1  0  135  1  1.05  0.95;
    ];

Only numeric literals are understood (no expressions). Column layouts are
fixed, see ``BUS_COLS`` and friends. ``mpc.storage`` is a local extension.
Files carry MW/MVAr/degrees; the in-memory :class:`~gridflow.model.Case` is
per-unit/radians.
"""

from __future__ import annotations

import json
import math
import re
from enum import Enum
from pathlib import Path
from typing import NamedTuple

from .model import (
    Branch,
    Bus,
    BusType,
    Case,
    CostModel,
    GenCost,
    Generator,
    StorageUnit,
)

BUS_COLS = ("BUS_I", "TYPE", "PD", "QD", "GS", "BS", "AREA", "VM", "VA", "BASE_KV", "ZONE", "VMAX", "VMIN")
GEN_COLS = ("GEN_BUS", "PG", "QG", "QMAX", "QMIN", "VG", "MBASE", "STATUS", "PMAX", "PMIN", "RAMP")
BRANCH_COLS = ("F_BUS", "T_BUS", "R", "X", "B", "RATE_A", "RATE_B", "RATE_C", "TAP", "SHIFT", "STATUS")
STORAGE_COLS = ("BUS", "EMAX", "E0", "PCMAX", "PDMAX", "ETAC", "ETAD")
GENCOST_HEAD = ("MODEL", "STARTUP", "SHUTDOWN", "NCOST")

_TABLE_WIDTH = {"bus": len(BUS_COLS), "gen": len(GEN_COLS), "branch": len(BRANCH_COLS), "storage": len(STORAGE_COLS)}


class CaseFormat(str, Enum):
    MATRIX = "matrix"
    JSON = "json"


class CaseParseError(ValueError):
    """Malformed case input. ``line``/``column`` are 1-based when known."""

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        loc = []
        if self.source:
            loc.append(str(self.source))
        if self.line is not None:
            loc.append(str(self.line))
            if self.column is not None:
                loc.append(str(self.column))
        prefix = ":".join(loc)
        return f"{prefix}: {self.message}" if prefix else self.message


# ---------------------------------------------------------------------------
# MatrixText tokenizer


_ASSIGN = re.compile(r"^\s*mpc\.(\w+)\s*=\s*(.*)$")
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?(?:Inf|inf|NaN|nan)")


def _strip_comment(line: str) -> str:
    # no string literals contain '%' in the subset we accept except the version string
    out = []
    in_str = False
    for ch in line:
        if ch == "'":
            in_str = not in_str
        if ch == "%" and not in_str:
            break
        out.append(ch)
    return "".join(out)


def _parse_number(tok: str, line: int, col: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise CaseParseError(f"invalid number {tok!r}", line, col) from None
    if not math.isfinite(val):
        raise CaseParseError(f"non-finite number {tok!r}", line, col)
    return val


def _scan_row(text: str, line: int, col0: int) -> list[tuple[float, int]]:
    """Parse whitespace/comma separated numbers; returns (value, column) pairs."""
    cells = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch in " \t,":
            pos += 1
            continue
        m = _NUMBER.match(text, pos)
        end = m.end() if m else pos
        # a token runs to the next separator; anything left over is junk
        stop = end
        while stop < len(text) and text[stop] not in " \t,":
            stop += 1
        tok = text[pos:stop]
        if not m or stop != end:
            raise CaseParseError(f"invalid number {tok!r}", line, col0 + pos + 1)
        cells.append((_parse_number(tok, line, col0 + pos + 1), col0 + pos + 1))
        pos = stop
    return cells


class _Row(NamedTuple):
    """One table row. Text rows carry line/column; JSON rows carry row/cell index."""

    line: int
    values: list
    cols: list | None  # 1-based text column of each cell, None for JSON rows
    table: str = ""

    def at(self, k: int):
        if self.cols is None:
            return self.line, k + 1, f"#/{self.table}"
        return self.line, (self.cols[min(k, len(self.cols) - 1)] if self.cols else 1), ""


def _read_matrix_text(text: str):
    """Return ``(scalars, tables, where)``; ``where`` maps names to their line."""
    scalars: dict[str, float] = {}
    tables: dict[str, list[_Row]] = {}
    where: dict[str, int] = {}
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    current = None  # (name, start line)
    rows: list[_Row] = []
    pending: list[tuple[float, int]] = []
    pending_line = None

    def flush_row():
        nonlocal pending, pending_line
        if pending:
            rows.append(_Row(pending_line, [v for v, _ in pending], [c for _, c in pending]))
        pending, pending_line = [], None

    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        if current is None:
            stripped = line.strip()
            if stripped.startswith("function"):
                continue
            m = _ASSIGN.match(line)
            if not m:
                col = len(line) - len(line.lstrip()) + 1
                raise CaseParseError(f"unexpected statement {stripped!r}", lineno, col)
            name, rhs = m.group(1), m.group(2).strip()
            rhs_col = m.start(2) + 1
            where[name] = lineno
            if rhs.startswith("["):
                current = (name, lineno)
                rows = []
                line, col0 = rhs[1:], rhs_col
            else:
                if name == "version":
                    continue
                value = rhs.rstrip(";").strip()
                if not value:
                    raise CaseParseError(f"missing value for mpc.{name}", lineno, rhs_col)
                scalars[name] = _parse_number(value, lineno, rhs_col)
                continue
        else:
            col0 = 0
        # inside a matrix literal
        close = line.find("]")
        segment = line if close < 0 else line[:close]
        parts = segment.split(";")
        offset = 0
        for k, part in enumerate(parts):
            cells = _scan_row(part, lineno, col0 + offset)
            if cells and pending_line is None:
                pending_line = lineno
            pending.extend(cells)
            if k < len(parts) - 1:
                flush_row()
            offset += len(part) + 1
        if close >= 0:
            flush_row()
            trailer = line[close + 1:].strip()
            if trailer not in ("", ";"):
                raise CaseParseError(f"unexpected text after ']': {trailer!r}", lineno, col0 + close + 2)
            tables[current[0]] = rows
            current = None
        else:
            # newline ends a row in MATLAB literal syntax
            flush_row()
    if current is not None:
        raise CaseParseError(f"unterminated matrix mpc.{current[0]}", current[1], 1)
    return scalars, tables, where


# ---------------------------------------------------------------------------
# table rows -> Case


def _build_case(base_mva, tables, where=None, name="case", source=None) -> Case:
    """``tables`` maps table name -> list of :class:`_Row`."""
    where = where or {}

    def fail(msg, loc=(None, None, "")):
        line, col, suffix = loc
        raise CaseParseError(msg, line, col, f"{source or ''}{suffix}" or None)

    def as_int(row, k, what):
        v = row.values[k]
        if v != int(v):
            fail(f"{what} must be an integer, got {v!r}", row.at(k))
        return int(v)

    if base_mva is None:
        fail("missing baseMVA", (1, 1, ""))
    if not (base_mva > 0):
        fail(f"baseMVA must be positive, got {base_mva!r}", (where.get("baseMVA", 1), 1, ""))
    bus_rows = tables.get("bus") or []
    if not bus_rows:
        fail("no buses", (where.get("bus", 1), 1, ""))

    for tname, width in _TABLE_WIDTH.items():
        for row in tables.get(tname) or []:
            if len(row.values) != width:
                fail(f"{tname} row has {len(row.values)} columns, expected {width}",
                     row.at(min(len(row.values), width)))

    base = float(base_mva)
    buses = []
    seen = set()
    for row in bus_rows:
        r = row.values
        bus_id = as_int(row, 0, "bus id")
        if bus_id in seen:
            fail(f"duplicate bus id {bus_id}", row.at(0))
        seen.add(bus_id)
        code = as_int(row, 1, "bus type")
        if code not in (1, 2, 3):
            fail(f"bus type must be 1, 2 or 3, got {code}", row.at(1))
        buses.append(Bus(
            id=bus_id, bus_type=BusType(code),
            pd=r[2] / base, qd=r[3] / base, gs=r[4] / base, bs=r[5] / base,
            area=as_int(row, 6, "area"), vm=r[7], va=math.radians(r[8]), base_kv=r[9],
            zone=as_int(row, 10, "zone"), vmax=r[11], vmin=r[12],
        ))

    def bus_ref(row, k, what):
        bus_id = as_int(row, k, what)
        if bus_id not in seen:
            fail(f"{what} references unknown bus {bus_id}", row.at(k))
        return bus_id

    gen_rows = tables.get("gen") or []
    cost_rows = tables.get("gencost") or []
    if cost_rows and len(cost_rows) not in (len(gen_rows), 2 * len(gen_rows)):
        fail(f"gencost has {len(cost_rows)} rows for {len(gen_rows)} generators", cost_rows[0].at(0))
    costs = [_gencost(row, fail, as_int) for row in cost_rows[: len(gen_rows)]]

    gens = []
    for k, row in enumerate(gen_rows):
        r = row.values
        gens.append(Generator(
            bus=bus_ref(row, 0, f"gen row {k + 1}"),
            pg=r[1] / base, qg=r[2] / base, qmax=r[3] / base, qmin=r[4] / base,
            vg=r[5], mbase=r[6], status=bool(r[7] > 0), pmax=r[8] / base, pmin=r[9] / base,
            ramp=(r[10] / base) if r[10] > 0 else math.inf,
            cost=costs[k] if costs else GenCost(),
        ))

    branches = []
    for k, row in enumerate(tables.get("branch") or []):
        r = row.values
        branches.append(Branch(
            from_bus=bus_ref(row, 0, f"branch row {k + 1}"),
            to_bus=bus_ref(row, 1, f"branch row {k + 1}"),
            r=r[2], x=r[3], b=r[4],
            rate_a=r[5] / base, rate_b=r[6] / base, rate_c=r[7] / base,
            tap=r[8] if r[8] != 0 else 1.0, shift=math.radians(r[9]), status=bool(r[10] > 0),
        ))

    storage = []
    for k, row in enumerate(tables.get("storage") or []):
        r = row.values
        storage.append(StorageUnit(
            bus=bus_ref(row, 0, f"storage row {k + 1}"),
            e_max=r[1] / base, e_initial=r[2] / base,
            p_charge_max=r[3] / base, p_discharge_max=r[4] / base,
            eta_charge=r[5], eta_discharge=r[6],
        ))

    return Case(base_mva=base, buses=buses, branches=branches, generators=gens, storage=storage, name=name)


def _gencost(row, fail, as_int) -> GenCost:
    r = row.values
    if len(r) < 4:
        fail(f"gencost row has {len(r)} columns, expected at least 4", row.at(len(r)))
    model = as_int(row, 0, "cost model")
    if model not in (1, 2):
        fail(f"cost model must be 1 or 2, got {model}", row.at(0))
    ncost = as_int(row, 3, "NCOST")
    kind = CostModel(model)
    width = 4 + (2 * ncost if kind is CostModel.PIECEWISE_LINEAR else ncost)
    if len(r) != width:
        fail(f"gencost row has {len(r)} columns, expected {width}", row.at(min(len(r), width)))
    return GenCost(kind=kind, coefficients=tuple(r[4:]), startup=r[1], shutdown=r[2])


# ---------------------------------------------------------------------------
# Case -> rows


def _rows(case: Case) -> dict[str, list[list[float]]]:
    base = case.base_mva
    bus = [
        [b.id, int(b.bus_type), b.pd * base, b.qd * base, b.gs * base, b.bs * base, b.area,
         b.vm, math.degrees(b.va), b.base_kv, b.zone, b.vmax, b.vmin]
        for b in case.buses
    ]
    gen = [
        [g.bus, g.pg * base, g.qg * base, g.qmax * base, g.qmin * base, g.vg, g.mbase,
         1 if g.status else 0, g.pmax * base, g.pmin * base,
         g.ramp * base if math.isfinite(g.ramp) else 0]
        for g in case.generators
    ]
    branch = [
        [br.from_bus, br.to_bus, br.r, br.x, br.b, br.rate_a * base, br.rate_b * base,
         br.rate_c * base, br.tap, math.degrees(br.shift), 1 if br.status else 0]
        for br in case.branches
    ]
    gencost = []
    for g in case.generators:
        c = g.cost
        n = len(c.coefficients) // 2 if c.kind is CostModel.PIECEWISE_LINEAR else len(c.coefficients)
        gencost.append([int(c.kind), c.startup, c.shutdown, n, *c.coefficients])
    storage = [
        [s.bus, s.e_max * base, s.e_initial * base, s.p_charge_max * base,
         s.p_discharge_max * base, s.eta_charge, s.eta_discharge]
        for s in case.storage
    ]
    return {"bus": bus, "gen": gen, "branch": branch, "gencost": gencost, "storage": storage}


def _fmt(v) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot serialize non-finite value {v!r}; case files hold finite numbers only")
    if isinstance(v, int) or (isinstance(v, float) and v.is_integer() and abs(v) < 1e15):
        return str(int(v))
    return f"{float(v):.15g}"


_HEADERS = {
    "bus": BUS_COLS,
    "gen": GEN_COLS,
    "branch": BRANCH_COLS,
    "gencost": GENCOST_HEAD + ("c...",),
    "storage": STORAGE_COLS,
}


def _to_matrix_text(case: Case) -> str:
    tables = _rows(case)
    fname = re.sub(r"\W", "_", case.name) or "case"
    out = [f"function mpc = {fname}", "mpc.version = '2';", f"mpc.baseMVA = {_fmt(case.base_mva)};"]
    for name in ("bus", "gen", "branch", "gencost", "storage"):
        rows = tables[name]
        if name == "storage" and not rows:
            continue
        if name == "gencost" and not rows:
            continue
        out.append("")
        out.append("%% " + "\t".join(_HEADERS[name]))
        out.append(f"mpc.{name} = [")
        for row in rows:
            out.append("\t" + "\t".join(_fmt(v) for v in row) + ";")
        out.append("];")
    return "\n".join(out) + "\n"


def _to_json(case: Case) -> str:
    # one table row per line; numbers share the MatrixText formatting
    parts = [f'  "name": {json.dumps(case.name)}', f'  "baseMVA": {_fmt(case.base_mva)}']
    for name, rows in _rows(case).items():
        if name == "storage" and not rows:
            continue
        body = ",\n".join("    [" + ", ".join(_fmt(v) for v in row) + "]" for row in rows)
        parts.append(f'  "{name}": [\n{body}\n  ]' if rows else f'  "{name}": []')
    return "{\n" + ",\n".join(parts) + "\n}\n"


def _from_json(text: str, source=None) -> Case:
    """JSON errors are located as ``source#/table:row:cell`` (1-based)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno, source) from None
    if not isinstance(doc, dict):
        raise CaseParseError("top-level JSON value must be an object", 1, 1, source)
    src = source or "<json>"
    tables = {}
    for name in ("bus", "gen", "branch", "gencost", "storage"):
        rows = doc.get(name) or []
        if not isinstance(rows, list):
            raise CaseParseError(f"'{name}' must be a list of rows", 1, None, f"{src}#/{name}")
        checked = []
        for k, row in enumerate(rows, start=1):
            if not isinstance(row, list):
                raise CaseParseError(f"{name} row {k} must be a list of numbers", k, None, f"{src}#/{name}")
            for c, v in enumerate(row, start=1):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise CaseParseError(f"invalid number {v!r}", k, c, f"{src}#/{name}")
                if not math.isfinite(v):
                    raise CaseParseError(f"non-finite number {v!r}", k, c, f"{src}#/{name}")
            checked.append(_Row(k, [float(v) for v in row], None, name))
        tables[name] = checked
    base = doc.get("baseMVA")
    if base is not None and (isinstance(base, bool) or not isinstance(base, (int, float))):
        raise CaseParseError("baseMVA must be a number", 1, None, f"{src}#/baseMVA")
    return _build_case(base, tables, name=str(doc.get("name", "case")), source=source)


# ---------------------------------------------------------------------------
# public API


def parse_case(text: str, format: CaseFormat | str = CaseFormat.MATRIX, name: str | None = None,
               source: str | None = None) -> Case:
    fmt = CaseFormat(format)
    if fmt is CaseFormat.JSON:
        case = _from_json(text, source)
    else:
        try:
            scalars, tables, where = _read_matrix_text(text)
        except CaseParseError as exc:
            exc.source = source
            raise
        fname = re.search(r"^\s*function\s+\w+\s*=\s*(\w+)", text, re.M)
        case = _build_case(scalars.get("baseMVA"), tables, where,
                           name=fname.group(1) if fname else "case", source=source)
    if name:
        case = case.replace(name=name)
    return case


def serialize_case(case: Case, format: CaseFormat | str = CaseFormat.MATRIX) -> str:
    fmt = CaseFormat(format)
    return _to_json(case) if fmt is CaseFormat.JSON else _to_matrix_text(case)


def guess_format(path) -> CaseFormat:
    return CaseFormat.JSON if str(path).lower().endswith(".json") else CaseFormat.MATRIX


def resolve_case_path(path) -> Path:
    """Accept a path with or without its ``.m``/``.json`` suffix."""
    p = Path(path)
    if p.exists():
        return p
    for suffix in (".m", ".json"):
        cand = p.with_name(p.name + suffix)
        if cand.exists():
            return cand
    raise FileNotFoundError(f"case file not found: {path}")


def decode_text(data: bytes, source=None) -> str:
    """UTF-8 decode with a located error instead of ``UnicodeDecodeError``."""
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        head = data[: exc.start]
        line = head.count(b"\n") + 1
        col = exc.start - (head.rfind(b"\n") + 1) + 1
        raise CaseParseError(f"invalid UTF-8 byte 0x{data[exc.start]:02x}", line, col,
                             str(source) if source else None) from None


def load_case(path, format: CaseFormat | str | None = None) -> Case:
    p = resolve_case_path(path)
    text = decode_text(p.read_bytes(), p)
    return parse_case(text, format or guess_format(p), source=str(p))


def save_case(case: Case, path, format: CaseFormat | str | None = None) -> None:
    Path(path).write_text(serialize_case(case, format or guess_format(path)), encoding="utf-8", newline="\n")
