"""Per-variable summaries of a source, for inspection before writing rules.

One streaming pass per summary: category counts are exact, numeric stats
cover the non-missing values that parse as numbers, and the median is
computed exactly from the value-count table rather than an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownColumn
from .tabio import TabularSource
from .values import is_missing, parse_number

DEFAULT_TOP_K = 50

# share of non-missing values that must parse as numbers for a column to
# count as numeric-like; EHR columns often carry stray sentinel text
NUMERIC_SHARE = 0.99


@dataclass(frozen=True)
class VariableSummary:
    name: str
    sniffed_type: str  # numericLike | textLike | mixed
    n_rows: int
    n_missing: int
    distinct_count: int
    top_categories: tuple[tuple[str, int], ...]
    numeric: dict | None  # min, max, mean, median

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "sniffedType": self.sniffed_type,
            "nRows": self.n_rows,
            "nMissing": self.n_missing,
            "distinctCount": self.distinct_count,
            "topCategories": [{"value": v, "count": c} for v, c in self.top_categories],
            "numeric": self.numeric,
        }


def _median_from_counts(counts: dict[float, int], n: int) -> float:
    ordered = sorted(counts)
    mid = n // 2
    if n % 2 == 1:
        targets = [mid]
    else:
        targets = [mid - 1, mid]
    picked = []
    cumulative = 0
    it = iter(ordered)
    value = None
    for t in targets:
        while cumulative <= t:
            value = next(it)
            cumulative += counts[value]
        picked.append(value)
    return sum(picked) / len(picked)


def summarize_variable(source: TabularSource, column: str,
                       k: int = DEFAULT_TOP_K) -> VariableSummary:
    """Summarize one column in a single streaming pass."""
    if column not in source.columns:
        raise UnknownColumn(column)
    idx = source.columns.index(column)

    n_rows = 0
    n_missing = 0
    counts: dict[str, int] = {}
    numeric_counts: dict[float, int] = {}
    numeric_n = 0
    numeric_sum = 0.0
    lo = hi = None

    for batch in source.batches():
        for row in batch.rows:
            n_rows += 1
            cell = row[idx]
            if is_missing(cell):
                n_missing += 1
                continue
            value = cell.strip()
            counts[value] = counts.get(value, 0) + 1
            num = parse_number(value)
            if num is not None:
                numeric_counts[num] = numeric_counts.get(num, 0) + 1
                numeric_n += 1
                numeric_sum += num
                lo = num if lo is None else min(lo, num)
                hi = num if hi is None else max(hi, num)

    non_missing = n_rows - n_missing
    if non_missing == 0:
        sniffed = "textLike"
    elif numeric_n / non_missing >= NUMERIC_SHARE:
        sniffed = "numericLike"
    elif numeric_n > 0:
        sniffed = "mixed"
    else:
        sniffed = "textLike"

    numeric = None
    if sniffed == "numericLike" and numeric_n:
        numeric = {
            "min": lo,
            "max": hi,
            "mean": numeric_sum / numeric_n,
            "median": _median_from_counts(numeric_counts, numeric_n),
        }

    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return VariableSummary(
        name=column,
        sniffed_type=sniffed,
        n_rows=n_rows,
        n_missing=n_missing,
        distinct_count=len(counts),
        top_categories=tuple(top),
        numeric=numeric,
    )
