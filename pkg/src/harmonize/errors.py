"""Exception hierarchy.

Grouped by subsystem so the CLI can map them onto stable exit codes:
sheet/validation problems, I/O problems, plan problems.
"""

from __future__ import annotations


class HarmonizeError(Exception):
    """Base for all errors raised by this package."""


# --- sheet parsing ---------------------------------------------------------

class SheetError(HarmonizeError):
    pass


class MissingColumn(SheetError):
    def __init__(self, name: str):
        super().__init__(f"missing required column: {name!r}")
        self.name = name


class DuplicateVariable(SheetError):
    def __init__(self, name: str, rows: list[int]):
        super().__init__(f"variable {name!r} defined more than once (rows {rows})")
        self.name = name
        self.rows = rows


class BadType(SheetError):
    def __init__(self, row: int, value: str, detail: str = ""):
        msg = f"row {row}: bad value {value!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.row = row
        self.value = value


class UnparseableRule(SheetError):
    def __init__(self, text: str, row: int | None = None, detail: str = ""):
        where = f"row {row}: " if row is not None else ""
        msg = f"{where}cannot parse match rule {text!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.text = text
        self.row = row


class InconsistentTypes(SheetError):
    def __init__(self, row: int, detail: str):
        super().__init__(f"row {row}: {detail}")
        self.row = row


# --- expression language ---------------------------------------------------

class ExprError(HarmonizeError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, position: int, message: str):
        super().__init__(f"syntax error at position {position}: {message}")
        self.position = position


class ExprTypeError(ExprError):
    def __init__(self, message: str):
        super().__init__(message)


class UnboundIdent(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unbound identifier: {name!r}")
        self.name = name


# --- plan compilation ------------------------------------------------------

class PlanError(HarmonizeError):
    pass


class UnknownDatabase(PlanError):
    def __init__(self, name: str):
        super().__init__(f"unknown database: {name!r}")
        self.name = name


class UnknownVariable(PlanError):
    def __init__(self, name: str):
        super().__init__(f"unknown variable: {name!r}")
        self.name = name


class CyclicDerivation(PlanError):
    def __init__(self, names: list[str]):
        super().__init__(f"cyclic derivation involving: {', '.join(names)}")
        self.names = names


class MissingComponent(PlanError):
    def __init__(self, name: str, component: str):
        super().__init__(f"derived variable {name!r} needs component {component!r}, "
                         "which is not in the plan")
        self.name = name
        self.component = component


class MissingSourceColumn(PlanError):
    def __init__(self, name: str, row_index: int | None = None):
        where = f" (row {row_index})" if row_index is not None else ""
        super().__init__(f"source column {name!r} not present{where}")
        self.name = name
        self.row_index = row_index


class UnmatchedValue(PlanError):
    """Raised in strict mode when a non-missing value matches no rule."""

    def __init__(self, variable: str, raw: str):
        super().__init__(f"value {raw!r} for {variable!r} matched no rule")
        self.variable = variable
        self.raw = raw


# --- I/O connectors --------------------------------------------------------

class SourceError(HarmonizeError):
    pass


class NotFound(SourceError):
    pass


class BadFormat(SourceError):
    pass


class UnknownTable(SourceError):
    pass


class UnsupportedFormat(SourceError):
    def __init__(self, fmt: str, hint: str = ""):
        msg = f"unsupported source format: {fmt!r}"
        if hint:
            msg += f". {hint}"
        super().__init__(msg)
        self.format = fmt


class UnknownColumn(SourceError):
    def __init__(self, name: str):
        super().__init__(f"unknown column: {name!r}")
        self.name = name


class ColumnMismatch(SourceError):
    pass


# --- derived variable library ---------------------------------------------

class DvlError(HarmonizeError):
    pass


class UnknownName(DvlError):
    def __init__(self, name: str):
        super().__init__(f"no derived variable named {name!r} in the library")
        self.name = name
