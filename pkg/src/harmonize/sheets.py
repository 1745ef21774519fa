"""The two metadata documents driving a recode run.

The *variable sheet* has one row per recoded variable (name, type, labels,
source bindings). The *variable details sheet* has one row per output
category: a match rule over source values on the left, an output value on
the right. Both are plain UTF-8 CSV with a mandatory header row.

Cell encodings:

* ``databaseStart``: comma-separated source database names.
* ``variableStart``: ``db::sourceName`` pairs separated by commas, plus an
  optional bare default name; or ``DerivedVar::[c1,c2,...]`` for derived
  variables.
* ``recEnd``: a category code, a number, the token ``copy``, or an NA
  token ``NA::a`` / ``NA::b`` / ``NA::c``. Derived rows carry
  ``Func::functionName`` instead.
* ``recStart``: the match-rule grammar handled by :func:`parse_match_rule`.
  Derived rows carry the expression body of the deriving function instead
  of a match rule.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from . import exprlang
from .errors import (
    BadType,
    DuplicateVariable,
    ExprSyntaxError,
    InconsistentTypes,
    MissingColumn,
    UnparseableRule,
)
from .values import format_number, parse_number

VARIABLE_COLUMNS = [
    "variable", "label", "labelLong", "section", "variableType",
    "units", "databaseStart", "variableStart",
]

DETAILS_COLUMNS = [
    "variable", "typeEnd", "typeStart", "databaseStart", "variableStart",
    "recEnd", "catLabel", "catLabelLong", "units", "recStart", "notes",
]

VARIABLE_REQUIRED = ["variable", "variableType", "databaseStart", "variableStart"]
DETAILS_REQUIRED = ["variable", "typeEnd", "typeStart", "databaseStart",
                    "variableStart", "recEnd", "recStart"]

TYPES = ("categorical", "continuous")

_DERIVED_RE = re.compile(r"^DerivedVar::\[(.*)\]$")
_INTERVAL_RE = re.compile(r"^([\[\(])\s*([^,\[\]\(\)]+?)\s*,\s*([^,\[\]\(\)]+?)\s*([\]\)])$")
_NA_TOKEN_RE = re.compile(r"^NA::([abc])$")


# --- match rules -----------------------------------------------------------

@dataclass(frozen=True)
class MatchRule:
    """One left-hand-side rule of a details row.

    kind is one of ``value_set``, ``interval``, ``else``, ``copy``,
    ``explicit_na``; only the fields relevant to the kind are populated.
    """

    kind: str
    values: tuple[str, ...] = ()
    low: float | None = None
    high: float | None = None
    low_closed: bool = True
    high_closed: bool = True
    na_code: str | None = None

    def matches(self, raw: str) -> bool:
        """Whether a trimmed, non-missing source value satisfies this rule.

        Interval and copy rules only match values that parse as numbers;
        anything else simply fails to match (it never errors).
        """
        if self.kind == "else":
            return True
        if self.kind == "value_set":
            return raw in self.values
        if self.kind in ("interval", "copy"):
            num = parse_number(raw)
            if num is None:
                return False
            if self.kind == "copy":
                return True
            lo_ok = num >= self.low if self.low_closed else num > self.low
            hi_ok = num <= self.high if self.high_closed else num < self.high
            return lo_ok and hi_ok
        if self.kind == "explicit_na":
            # explicit NA rows re-map source NA tokens; the engine routes
            # missing cells before rule matching, so a literal token here
            # matches itself when it survives as data.
            return raw == f"NA::{self.na_code}"
        raise AssertionError(self.kind)


def parse_match_rule(text: str) -> MatchRule:
    """Parse the textual rule grammar. Total: anything not in the grammar
    raises UnparseableRule, nothing else escapes."""
    stripped = text.strip()
    if stripped == "else":
        return MatchRule(kind="else")
    if stripped == "copy":
        return MatchRule(kind="copy")
    m = _NA_TOKEN_RE.match(stripped)
    if m:
        return MatchRule(kind="explicit_na", na_code=m.group(1))
    m = _INTERVAL_RE.match(stripped)
    if m:
        open_b, lo_text, hi_text, close_b = m.groups()
        lo = parse_number(lo_text)
        hi = parse_number(hi_text)
        if lo is None or hi is None:
            raise UnparseableRule(text, detail="interval bounds must be numbers")
        if lo > hi:
            raise UnparseableRule(text, detail="interval low exceeds high")
        return MatchRule(kind="interval", low=lo, high=hi,
                         low_closed=open_b == "[", high_closed=close_b == "]")
    if stripped.startswith(("[", "(")) or stripped.endswith(("]", ")")):
        raise UnparseableRule(text, detail="malformed interval")
    values = tuple(v.strip() for v in stripped.split(","))
    if any(v == "" for v in values):
        raise UnparseableRule(text, detail="empty value in value set")
    if len(set(values)) != len(values):
        raise UnparseableRule(text, detail="duplicate value in value set")
    return MatchRule(kind="value_set", values=values)


def serialize_match_rule(rule: MatchRule) -> str:
    if rule.kind == "else":
        return "else"
    if rule.kind == "copy":
        return "copy"
    if rule.kind == "explicit_na":
        return f"NA::{rule.na_code}"
    if rule.kind == "interval":
        lo_b = "[" if rule.low_closed else "("
        hi_b = "]" if rule.high_closed else ")"
        return f"{lo_b}{format_number(rule.low)},{format_number(rule.high)}{hi_b}"
    if rule.kind == "value_set":
        return ",".join(rule.values)
    raise AssertionError(rule.kind)


# --- source bindings -------------------------------------------------------

@dataclass(frozen=True)
class SourceRef:
    """Where a recoded variable's raw values come from.

    Either a per-database map of source column names (with an optional bare
    default), or -- for derived variables -- the ordered component list.
    """

    sources: tuple[tuple[str, str], ...] = ()
    default: str | None = None
    derived_components: tuple[str, ...] | None = None

    @property
    def is_derived(self) -> bool:
        return self.derived_components is not None

    def resolve(self, database: str) -> str | None:
        for db, name in self.sources:
            if db == database:
                return name
        return self.default


def parse_source_ref(cell: str, row: int) -> SourceRef:
    cell = cell.strip()
    m = _DERIVED_RE.match(cell)
    if m:
        parts = tuple(p.strip() for p in m.group(1).split(",") if p.strip())
        if not parts:
            raise BadType(row, cell, "derived variable needs at least one component")
        return SourceRef(derived_components=parts)
    pairs: list[tuple[str, str]] = []
    default: str | None = None
    for piece in cell.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "::" in piece:
            db, _, name = piece.partition("::")
            pairs.append((db.strip(), name.strip()))
        else:
            if default is not None:
                raise BadType(row, cell, "more than one bare default source name")
            default = piece
    if not pairs and default is None:
        raise BadType(row, cell, "empty source binding")
    return SourceRef(sources=tuple(pairs), default=default)


def serialize_source_ref(ref: SourceRef) -> str:
    if ref.is_derived:
        return "DerivedVar::[" + ",".join(ref.derived_components) + "]"
    parts = [f"{db}::{name}" for db, name in ref.sources]
    if ref.default is not None:
        parts.append(ref.default)
    return ",".join(parts)


# --- sheet rows ------------------------------------------------------------

@dataclass(frozen=True)
class VariableEntry:
    variable: str
    variableType: str
    databaseStart: tuple[str, ...]
    variableStart: SourceRef
    label: str | None = None
    labelLong: str | None = None
    section: str | None = None
    units: str | None = None
    extras: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class VariableSheet:
    entries: tuple[VariableEntry, ...]
    extra_columns: tuple[str, ...] = ()

    def get(self, name: str) -> VariableEntry | None:
        for e in self.entries:
            if e.variable == name:
                return e
        return None

    def names(self) -> list[str]:
        return [e.variable for e in self.entries]


@dataclass(frozen=True)
class DetailsRow:
    variable: str
    typeEnd: str
    typeStart: str
    databaseStart: tuple[str, ...]
    variableStart: SourceRef
    recEnd: str
    recStart: MatchRule | None  # None for derived rows
    functionBody: str | None = None  # expression source, derived rows only
    catLabel: str | None = None
    catLabelLong: str | None = None
    units: str | None = None
    notes: str | None = None
    extras: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class DetailsSheet:
    rows: tuple[DetailsRow, ...]
    extra_columns: tuple[str, ...] = ()

    def for_variable(self, name: str) -> list[DetailsRow]:
        return [r for r in self.rows if r.variable == name]


# --- CSV plumbing ----------------------------------------------------------

def _decode(data: bytes | str) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _read_csv(data: bytes | str, required: list[str]) -> tuple[list[str], list[dict[str, str]]]:
    text = _decode(data)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn(required[0])
    header = [h.strip() for h in header]
    for col in required:
        if col not in header:
            raise MissingColumn(col)
    rows = []
    for raw in reader:
        if not raw or all(c.strip() == "" for c in raw):
            continue
        # short rows pad with empty cells; long rows are a format error we
        # tolerate by ignoring the tail
        cells = dict(zip(header, raw + [""] * (len(header) - len(raw))))
        rows.append(cells)
    return header, rows


def _opt(cell: str | None) -> str | None:
    if cell is None:
        return None
    cell = cell.strip()
    return cell if cell else None


def _split_list(cell: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in cell.split(",") if p.strip())


def parse_variable_sheet(data: bytes | str) -> VariableSheet:
    """Parse a variable sheet CSV. Unknown columns are kept as row extras
    so that serialize round-trips them."""
    header, raw_rows = _read_csv(data, VARIABLE_REQUIRED)
    extra_cols = tuple(h for h in header if h not in VARIABLE_COLUMNS)
    entries: list[VariableEntry] = []
    seen: dict[str, int] = {}
    for i, cells in enumerate(raw_rows, start=1):
        name = cells["variable"].strip()
        if not name:
            raise BadType(i, cells["variable"], "variable name must be nonempty")
        if name in seen:
            raise DuplicateVariable(name, [seen[name], i])
        seen[name] = i
        vtype = cells["variableType"].strip()
        if vtype not in TYPES:
            raise BadType(i, vtype, "variableType must be categorical or continuous")
        databases = _split_list(cells["databaseStart"])
        if not databases:
            raise BadType(i, cells["databaseStart"], "databaseStart must name >=1 database")
        ref = parse_source_ref(cells["variableStart"], i)
        if not ref.is_derived:
            for db, _src in ref.sources:
                if db not in databases:
                    raise BadType(i, db, "variableStart names a database missing "
                                         "from databaseStart")
        entries.append(VariableEntry(
            variable=name,
            variableType=vtype,
            databaseStart=databases,
            variableStart=ref,
            label=_opt(cells.get("label")),
            labelLong=_opt(cells.get("labelLong")),
            section=_opt(cells.get("section")),
            units=_opt(cells.get("units")),
            extras=tuple((c, cells.get(c, "")) for c in extra_cols),
        ))
    return VariableSheet(entries=tuple(entries), extra_columns=extra_cols)


def parse_details_sheet(data: bytes | str) -> DetailsSheet:
    """Parse a details sheet CSV. Row order is preserved: the engine applies
    rules first-match-wins in sheet order."""
    header, raw_rows = _read_csv(data, DETAILS_REQUIRED)
    extra_cols = tuple(h for h in header if h not in DETAILS_COLUMNS)
    rows: list[DetailsRow] = []
    for i, cells in enumerate(raw_rows, start=1):
        name = cells["variable"].strip()
        if not name:
            raise BadType(i, cells["variable"], "variable name must be nonempty")
        t_end = cells["typeEnd"].strip()
        t_start = cells["typeStart"].strip()
        for t in (t_end, t_start):
            if t not in TYPES:
                raise BadType(i, t, "type must be categorical or continuous")
        databases = _split_list(cells["databaseStart"])
        ref = parse_source_ref(cells["variableStart"], i)
        rec_end = cells["recEnd"].strip()
        if not rec_end:
            raise BadType(i, rec_end, "recEnd must be nonempty")
        rule: MatchRule | None = None
        body: str | None = None
        if ref.is_derived:
            # derived rows carry the expression body in recStart
            body = cells["recStart"].strip()
            if not body:
                raise UnparseableRule("", row=i, detail="derived row needs an expression body")
        else:
            try:
                rule = parse_match_rule(cells["recStart"])
            except UnparseableRule as exc:
                raise UnparseableRule(exc.text, row=i, detail=str(exc)) from None
            if rule.kind == "interval" and t_start != "continuous":
                raise InconsistentTypes(i, "interval rules require typeStart=continuous")
            if rule.kind == "copy" and (t_start != "continuous" or t_end != "continuous"):
                raise InconsistentTypes(i, "copy rules require continuous typeStart and typeEnd")
        rows.append(DetailsRow(
            variable=name,
            typeEnd=t_end,
            typeStart=t_start,
            databaseStart=databases,
            variableStart=ref,
            recEnd=rec_end,
            recStart=rule,
            functionBody=body,
            catLabel=_opt(cells.get("catLabel")),
            catLabelLong=_opt(cells.get("catLabelLong")),
            units=_opt(cells.get("units")),
            notes=_opt(cells.get("notes")),
            extras=tuple((c, cells.get(c, "")) for c in extra_cols),
        ))
    return DetailsSheet(rows=tuple(rows), extra_columns=extra_cols)


def _write_csv(header: list[str], rows: list[list[str]]) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def serialize_variable_sheet(sheet: VariableSheet) -> bytes:
    header = VARIABLE_COLUMNS + list(sheet.extra_columns)
    rows = []
    for e in sheet.entries:
        extras = dict(e.extras)
        rows.append([
            e.variable, e.label or "", e.labelLong or "", e.section or "",
            e.variableType, e.units or "", ",".join(e.databaseStart),
            serialize_source_ref(e.variableStart),
        ] + [extras.get(c, "") for c in sheet.extra_columns])
    return _write_csv(header, rows)


def serialize_details_sheet(sheet: DetailsSheet) -> bytes:
    header = DETAILS_COLUMNS + list(sheet.extra_columns)
    rows = []
    for r in sheet.rows:
        extras = dict(r.extras)
        rows.append([
            r.variable, r.typeEnd, r.typeStart, ",".join(r.databaseStart),
            serialize_source_ref(r.variableStart), r.recEnd,
            r.catLabel or "", r.catLabelLong or "", r.units or "",
            r.functionBody if r.recStart is None else serialize_match_rule(r.recStart),
            r.notes or "",
        ] + [extras.get(c, "") for c in sheet.extra_columns])
    return _write_csv(header, rows)


# --- cross-sheet validation ------------------------------------------------

@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    sheet: str     # "variables" | "details"
    row: int | None
    column: str | None
    message: str

    @property
    def location(self) -> str:
        parts = [self.sheet]
        if self.row is not None:
            parts.append(f"row {self.row}")
        if self.column is not None:
            parts.append(f"column {self.column}")
        return ", ".join(parts)


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "findings": [
                {"severity": f.severity, "sheet": f.sheet, "row": f.row,
                 "column": f.column, "message": f.message}
                for f in self.findings
            ],
        }


def _intervals_overlap(a: MatchRule, b: MatchRule) -> bool:
    # treat half-open bounds correctly: [0,9] and [9,12] overlap, [0,9) and [9,12] do not
    lo, lo_closed = (a.low, a.low_closed) if a.low >= b.low else (b.low, b.low_closed)
    hi, hi_closed = (a.high, a.high_closed) if a.high <= b.high else (b.high, b.high_closed)
    if lo < hi:
        return True
    if lo == hi:
        a_at = (a.low <= lo <= a.high
                and (lo > a.low or a.low_closed) and (lo < a.high or a.high_closed))
        b_at = (b.low <= lo <= b.high
                and (lo > b.low or b.low_closed) and (lo < b.high or b.high_closed))
        return a_at and b_at
    return False


def validate_sheets(vs: VariableSheet, ds: DetailsSheet) -> ValidationReport:
    """Cross-check the two sheets. Never raises: every problem becomes a
    finding, and ok is true iff there are no error-severity findings."""
    findings: list[Finding] = []
    known = set(vs.names())

    for i, row in enumerate(ds.rows, start=1):
        if row.variable not in known:
            findings.append(Finding("error", "details", i, "variable",
                                    f"variable {row.variable!r} is not defined in the "
                                    "variable sheet"))
        if row.variableStart.is_derived:
            for comp in row.variableStart.derived_components:
                if comp not in known:
                    findings.append(Finding("error", "details", i, "variableStart",
                                            f"derived component {comp!r} is not a recoded "
                                            "variable in the variable sheet"))
            if row.functionBody is not None:
                try:
                    expr = exprlang.parse_expression(row.functionBody)
                except ExprSyntaxError as exc:
                    findings.append(Finding("error", "details", i, "recStart", str(exc)))
                else:
                    stray = exprlang.free_idents(expr) - set(row.variableStart.derived_components)
                    for name in sorted(stray):
                        findings.append(Finding("error", "details", i, "recStart",
                                                f"expression references {name!r}, which is "
                                                "not a declared component"))
        if row.recStart is not None:
            if row.recStart.kind == "interval" and row.typeStart != "continuous":
                findings.append(Finding("error", "details", i, "typeStart",
                                        "interval rule on a non-continuous source"))
            if row.recStart.kind == "copy" and row.typeEnd != "continuous":
                findings.append(Finding("error", "details", i, "typeEnd",
                                        "copy rule with a non-continuous output type"))

    # per (variable, database): at most one else; warn on overlapping intervals
    by_key: dict[tuple[str, str], list[tuple[int, DetailsRow]]] = {}
    for i, row in enumerate(ds.rows, start=1):
        if row.recStart is None:
            continue
        for db in row.databaseStart:
            by_key.setdefault((row.variable, db), []).append((i, row))
    for (var, db), group in by_key.items():
        else_rows = [i for i, r in group if r.recStart.kind == "else"]
        if len(else_rows) > 1:
            findings.append(Finding("error", "details", else_rows[-1], "recStart",
                                    f"more than one else rule for {var!r} in database "
                                    f"{db!r} (rows {else_rows})"))
        intervals = [(i, r.recStart) for i, r in group if r.recStart.kind == "interval"]
        for a in range(len(intervals)):
            for b in range(a + 1, len(intervals)):
                ia, ra = intervals[a]
                ib, rb = intervals[b]
                if _intervals_overlap(ra, rb):
                    findings.append(Finding("warning", "details", ib, "recStart",
                                            f"interval overlaps row {ia} for {var!r} in "
                                            f"database {db!r}; first match wins"))

    # variable-sheet side: derived entries must reference known variables too
    for i, entry in enumerate(vs.entries, start=1):
        if entry.variableStart.is_derived:
            for comp in entry.variableStart.derived_components:
                if comp not in known:
                    findings.append(Finding("error", "variables", i, "variableStart",
                                            f"derived component {comp!r} is not defined"))

    return ValidationReport(findings=tuple(findings))
