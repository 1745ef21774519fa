"""Compile validated sheets into an executable plan and run it.

A RecodePlan is built for exactly one source database. Running it is a
pure, row-at-a-time transformation: rules are tried in sheet order with
the first match winning, missing source cells map to NA(b), derived
variables evaluate over already-recoded values in dependency order, and
passthrough columns are copied verbatim. Output therefore depends only on
(sheets, dataset, selection) -- never on chunk size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Callable

from . import exprlang
from .dvl import DerivedVariableLibrary, DerivedVariableSpec
from .errors import (
    CyclicDerivation,
    MissingComponent,
    MissingSourceColumn,
    PlanError,
    UnknownDatabase,
    UnknownVariable,
    UnmatchedValue,
)
from .sheets import (
    DetailsRow,
    DetailsSheet,
    MatchRule,
    VariableSheet,
    validate_sheets,
)
from .tabio import RowSink, TabularSource
from .values import NA, Category, Copied, Number, OutputValue, is_missing, parse_number

_COPY = object()  # sentinel output: pass the (numeric) source text through


@dataclass(frozen=True)
class CompiledRule:
    rule: MatchRule
    output: object  # OutputValue or the _COPY sentinel
    catLabel: str | None = None


@dataclass(frozen=True)
class CompiledVariable:
    name: str
    source_column: str
    typeStart: str
    typeEnd: str
    rules: tuple[CompiledRule, ...]


@dataclass(frozen=True)
class CompiledDerived:
    spec: DerivedVariableSpec
    expr: exprlang.Expr


@dataclass(frozen=True)
class RecodePlan:
    database: str
    variables: tuple[CompiledVariable, ...]
    derived: tuple[CompiledDerived, ...]  # topologically ordered
    passthrough: tuple[str, ...]
    strict_unmatched: bool = False

    @property
    def output_columns(self) -> list[str]:
        return ([v.name for v in self.variables]
                + [d.spec.name for d in self.derived]
                + list(self.passthrough))

    @property
    def source_columns(self) -> list[str]:
        cols = [v.source_column for v in self.variables]
        cols += [c for c in self.passthrough if c not in cols]
        return cols

    def variable_types(self) -> dict[str, str]:
        types = {v.name: v.typeEnd for v in self.variables}
        types.update({d.spec.name: d.spec.outputType for d in self.derived})
        return types


@dataclass
class RunStats:
    rows_in: int = 0
    rows_out: int = 0
    na_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    unmatched: dict[str, int] = field(default_factory=dict)

    def count_value(self, column: str, value: OutputValue) -> None:
        if isinstance(value, NA):
            per_col = self.na_counts.setdefault(column, {"a": 0, "b": 0, "c": 0})
            per_col[value.code] += 1

    def to_dict(self) -> dict:
        return {
            "rowsIn": self.rows_in,
            "rowsOut": self.rows_out,
            "naCounts": self.na_counts,
            "unmatched": self.unmatched,
        }


def _rule_output(row: DetailsRow) -> object:
    rec = row.recEnd
    if rec == "copy":
        return _COPY
    if rec.startswith("NA::") and rec[4:] in ("a", "b", "c"):
        return NA(rec[4:])
    if row.typeEnd == "continuous":
        num = parse_number(rec)
        if num is not None:
            return Number(num, text=rec)
    return Category(rec)


def _compile_variable(name: str, source_column: str,
                      rows: list[DetailsRow]) -> CompiledVariable:
    if not rows:
        raise PlanError(f"no details rows define variable {name!r}")
    compiled = [CompiledRule(rule=r.recStart, output=_rule_output(r),
                             catLabel=r.catLabel) for r in rows]
    # sheet order is the match order, except a trailing else is guaranteed last
    non_else = [c for c in compiled if c.rule.kind != "else"]
    elses = [c for c in compiled if c.rule.kind == "else"]
    return CompiledVariable(
        name=name,
        source_column=source_column,
        typeStart=rows[0].typeStart,
        typeEnd=rows[0].typeEnd,
        rules=tuple(non_else + elses),
    )


def _toposort(specs: dict[str, DerivedVariableSpec],
              plain: set[str]) -> list[str]:
    graph: dict[str, set[str]] = {}
    for name, spec in specs.items():
        deps = set()
        for comp in spec.components:
            if comp in specs:
                deps.add(comp)
            elif comp not in plain:
                raise MissingComponent(name, comp)
        graph[name] = deps
    try:
        return list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise CyclicDerivation(list(exc.args[1])) from None


def _spec_from_rows(name: str, rows: list[DetailsRow]) -> DerivedVariableSpec:
    if len(rows) != 1:
        raise PlanError(f"derived variable {name!r} must have exactly one details row")
    row = rows[0]
    func_name = row.recEnd
    if func_name.startswith("Func::"):
        func_name = func_name[len("Func::"):]
    return DerivedVariableSpec(
        name=name,
        components=row.variableStart.derived_components,
        functionName=func_name,
        functionBody=row.functionBody or "",
        outputType=row.typeEnd,
        notes=row.notes,
    )


def compile_plan(vs: VariableSheet, ds: DetailsSheet, database: str,
                 selected: list[str], passthrough: list[str],
                 strict_unmatched: bool = False) -> RecodePlan:
    """Compile the two sheets into an executable plan for one database.

    ``selected`` may mix plain and derived variables; derived components
    must themselves be selected. Passthrough columns keep their source
    names and may not collide with recoded column names.
    """
    report = validate_sheets(vs, ds)
    if not report.ok:
        msgs = "; ".join(f.message for f in report.errors[:5])
        raise PlanError(f"sheets do not validate: {msgs}")

    all_databases = {db for e in vs.entries for db in e.databaseStart}
    for row in ds.rows:
        all_databases.update(row.databaseStart)
    if database not in all_databases:
        raise UnknownDatabase(database)

    plain: list[CompiledVariable] = []
    derived_specs: dict[str, DerivedVariableSpec] = {}
    for name in selected:
        entry = vs.get(name)
        if entry is None:
            raise UnknownVariable(name)
        rows = [r for r in ds.rows
                if r.variable == name and database in r.databaseStart]
        if entry.variableStart.is_derived:
            derived_specs[name] = _spec_from_rows(name, rows or [
                r for r in ds.rows if r.variable == name])
            continue
        if database not in entry.databaseStart:
            raise UnknownVariable(f"{name} (not defined for database {database!r})")
        source_column = entry.variableStart.resolve(database)
        if source_column is None:
            raise PlanError(f"variable {name!r} has no source binding for "
                            f"database {database!r}")
        plain.append(_compile_variable(name, source_column, rows))

    plain_names = {v.name for v in plain}
    order = _toposort(derived_specs, plain_names)
    derived = []
    types = {v.name: v.typeEnd for v in plain}
    for name in order:
        spec = derived_specs[name]
        spec.check_types(types)
        types[name] = spec.outputType
        derived.append(CompiledDerived(spec=spec,
                                       expr=exprlang.parse_expression(spec.functionBody)))

    recoded_names = plain_names | set(derived_specs)
    for col in passthrough:
        if col in recoded_names:
            raise PlanError(f"passthrough column {col!r} collides with a recoded "
                            "variable name")

    return RecodePlan(
        database=database,
        variables=tuple(plain),
        derived=tuple(derived),
        passthrough=tuple(passthrough),
        strict_unmatched=strict_unmatched,
    )


def apply_from_dvl(plan: RecodePlan, lib: DerivedVariableLibrary,
                   names: list[str]) -> RecodePlan:
    """Extend a plan with derived variables taken from a library (latest
    version of each name); dependency order is recomputed."""
    if not names:
        return plan
    specs = {d.spec.name: d.spec for d in plan.derived}
    for name in names:
        specs[name] = lib.get(name)
    plain_names = {v.name for v in plan.variables}
    order = _toposort(specs, plain_names)
    types = {v.name: v.typeEnd for v in plan.variables}
    derived = []
    for name in order:
        spec = specs[name]
        spec.check_types(types)
        types[name] = spec.outputType
        derived.append(CompiledDerived(spec=spec,
                                       expr=exprlang.parse_expression(spec.functionBody)))
    return RecodePlan(
        database=plan.database,
        variables=plan.variables,
        derived=tuple(derived),
        passthrough=plan.passthrough,
        strict_unmatched=plan.strict_unmatched,
    )


# --- execution -------------------------------------------------------------

def _recode_compiled(var: CompiledVariable, raw: str | None,
                     strict: bool) -> tuple[OutputValue, bool]:
    """Returns (value, matched). Unmatched non-missing values fall back to
    NA(b) unless strict mode is on."""
    if raw is None or is_missing(raw):
        return NA("b"), True
    trimmed = raw.strip()
    for compiled in var.rules:
        if compiled.rule.matches(trimmed):
            if compiled.output is _COPY:
                return Copied(trimmed), True
            return compiled.output, True
    if strict:
        raise UnmatchedValue(var.name, raw)
    return NA("b"), False


def recode_value(plan: RecodePlan, variable: str, raw: str | None) -> OutputValue:
    """Recode one raw source value for one variable. Total over arbitrary
    strings: the result is always a rule output or NA(b)."""
    for var in plan.variables:
        if var.name == variable:
            value, _ = _recode_compiled(var, raw, plan.strict_unmatched)
            return value
    raise UnknownVariable(variable)


def recode_row(plan: RecodePlan, source_row: dict[str, str],
               stats: RunStats | None = None) -> dict[str, OutputValue]:
    """Recode a single source row into the full output row: selected
    variables in selection order, then derived variables in dependency
    order, then passthrough columns verbatim."""
    out: dict[str, OutputValue] = {}
    for var in plan.variables:
        if var.source_column not in source_row:
            raise MissingSourceColumn(var.source_column)
        value, matched = _recode_compiled(var, source_row[var.source_column],
                                          plan.strict_unmatched)
        if not matched and stats is not None:
            stats.unmatched[var.name] = stats.unmatched.get(var.name, 0) + 1
        out[var.name] = value
    for d in plan.derived:
        bindings = {comp: out[comp] for comp in d.spec.components}
        out[d.spec.name] = exprlang.evaluate(d.expr, bindings)
    for col in plan.passthrough:
        if col not in source_row:
            raise MissingSourceColumn(col)
        out[col] = Copied(source_row[col])
    return out


def recode_stream(plan: RecodePlan, source: TabularSource, sink: RowSink,
                  progress: Callable[[int], None] | None = None) -> RunStats:
    """Stream every source row through the plan into the sink, preserving
    row order. Returns exact per-column NA counts and row totals."""
    missing_cols = [c for c in plan.source_columns if c not in source.columns]
    if missing_cols:
        raise MissingSourceColumn(missing_cols[0])

    stats = RunStats()
    columns = source.columns
    for batch in source.batches():
        for offset, raw in enumerate(batch.rows):
            row = dict(zip(columns, raw))
            try:
                out = recode_row(plan, row, stats)
            except MissingSourceColumn as exc:
                raise MissingSourceColumn(exc.name,
                                          batch.start_index + offset) from None
            stats.rows_in += 1
            for name, value in out.items():
                stats.count_value(name, value)
            sink.write_row(out)
            stats.rows_out += 1
        if progress is not None:
            progress(stats.rows_in)
    return stats
