"""Output value types shared by the recode engine, the expression
evaluator and the I/O layer.

Every cell produced by a recode run is one of four things: a category
code, a number, a verbatim copy of the source text, or one of the three
missing-data codes. Missing data is never the bare string "NA" -- it
always carries its code letter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

#: The three missing-data codes and their fixed meanings. Not user-extensible.
NA_MEANINGS = {
    "a": "not applicable",
    "b": "missing",
    "c": "not asked",
}

#: Source-cell tokens treated as missing (compared case-sensitively after trimming).
MISSING_TOKENS = frozenset({"", "NA", "NaN"})

_NUMBER_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")


def is_missing(raw: str | None) -> bool:
    """True if a raw source cell counts as missing data."""
    if raw is None:
        return True
    return raw.strip() in MISSING_TOKENS


def parse_number(text: str) -> float | None:
    """Parse a decimal number, locale-independent, period separator only.

    Returns None for anything else (thousands separators, underscores,
    inf/nan spellings, hex, empty).
    """
    text = text.strip()
    if not _NUMBER_RE.match(text):
        return None
    return float(text)


def format_number(value: float) -> str:
    """Canonical text form: integral floats print without a decimal point."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


class OutputValue:
    """Base of the tagged union of recoded cell values."""

    __slots__ = ()

    def is_na(self) -> bool:
        return isinstance(self, NA)


@dataclass(frozen=True, slots=True)
class Category(OutputValue):
    code: str


@dataclass(frozen=True, slots=True)
class Number(OutputValue):
    value: float
    # original text, kept so serialization does not reformat user input
    text: str | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Copied(OutputValue):
    raw: str


@dataclass(frozen=True, slots=True)
class NA(OutputValue):
    code: str  # "a" | "b" | "c"

    def __post_init__(self) -> None:
        if self.code not in NA_MEANINGS:
            raise ValueError(f"unknown NA code: {self.code!r}")

    @property
    def meaning(self) -> str:
        return NA_MEANINGS[self.code]


def render_value(value: OutputValue) -> str:
    """Serialize an output value to its textual file form.

    NA codes become the literal tokens ``NA(a)`` / ``NA(b)`` / ``NA(c)`` so
    they stay distinguishable from a source cell that contained "NA".
    """
    if isinstance(value, Category):
        return value.code
    if isinstance(value, Number):
        return value.text if value.text is not None else format_number(value.value)
    if isinstance(value, Copied):
        return value.raw
    if isinstance(value, NA):
        return f"NA({value.code})"
    raise TypeError(f"not an OutputValue: {value!r}")
