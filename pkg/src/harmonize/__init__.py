"""Metadata-driven recoding and harmonization of tabular health/survey data."""

__version__ = "0.1.0"

from .dvl import DerivedVariableLibrary, DerivedVariableSpec
from .engine import (
    RecodePlan,
    RunStats,
    apply_from_dvl,
    compile_plan,
    recode_row,
    recode_stream,
    recode_value,
)
from .exprlang import check_expr, evaluate, parse_expression
from .sheets import (
    DetailsSheet,
    MatchRule,
    ValidationReport,
    VariableSheet,
    parse_details_sheet,
    parse_match_rule,
    parse_variable_sheet,
    serialize_details_sheet,
    serialize_variable_sheet,
    validate_sheets,
)
from .summary import VariableSummary, summarize_variable
from .tabio import count_missing, open_sink, open_source
from .values import NA, Category, Copied, Number, OutputValue, render_value

__all__ = [
    "__version__",
    "Category", "Copied", "NA", "Number", "OutputValue", "render_value",
    "MatchRule", "VariableSheet", "DetailsSheet", "ValidationReport",
    "parse_variable_sheet", "parse_details_sheet", "parse_match_rule",
    "serialize_variable_sheet", "serialize_details_sheet", "validate_sheets",
    "parse_expression", "check_expr", "evaluate",
    "DerivedVariableSpec", "DerivedVariableLibrary",
    "RecodePlan", "RunStats", "compile_plan", "apply_from_dvl",
    "recode_value", "recode_row", "recode_stream",
    "open_source", "open_sink", "count_missing",
    "VariableSummary", "summarize_variable",
]
