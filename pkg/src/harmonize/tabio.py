"""Tabular sources and sinks: CSV files and single-file SQLite databases.

Everything crosses this layer as text. Rows stream out in bounded
batches so memory stays proportional to the chunk size, not the file;
typing and missing-value interpretation happen in the engine against the
sheet metadata, never here. SAS7BDAT and RDS are recognized and rejected
with a pointer to the conversion path rather than half-supported.
"""

from __future__ import annotations

import csv
import sqlite3
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import (
    BadFormat,
    ColumnMismatch,
    NotFound,
    UnknownTable,
    UnsupportedFormat,
)
from .values import OutputValue, is_missing, render_value

DEFAULT_CHUNK_SIZE = 50_000

_CONVERT_HINT = ("Convert the file to CSV or SQLite first (the SQLite path is "
                 "recommended for large datasets).")


@dataclass
class RowBatch:
    """A bounded slice of rows; batches arrive gap-free in file order."""

    rows: list[list[str]]
    start_index: int


class TabularSource:
    """Streaming handle over one table. Re-iterable: each call to
    :meth:`batches` restarts from the first row."""

    format: str
    location: Path
    table: str | None
    columns: list[str]
    row_count_hint: int | None
    dataset_name: str | None

    def batches(self) -> Iterator[RowBatch]:
        raise NotImplementedError

    def rows(self) -> Iterator[list[str]]:
        for batch in self.batches():
            yield from batch.rows


class CsvSource(TabularSource):
    def __init__(self, location: Path, chunk_size: int, dataset_name: str | None):
        self.format = "csv"
        self.location = location
        self.table = None
        self.chunk_size = chunk_size
        self.dataset_name = dataset_name
        self.row_count_hint = None
        try:
            with location.open(newline="", encoding="utf-8") as fh:
                header = next(csv.reader(fh), None)
        except UnicodeDecodeError as exc:
            raise BadFormat(f"{location}: not UTF-8 text: {exc}") from None
        if not header or all(h.strip() == "" for h in header):
            raise BadFormat(f"{location}: missing CSV header row")
        self.columns = [h.strip() for h in header]

    def batches(self) -> Iterator[RowBatch]:
        width = len(self.columns)
        with self.location.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)  # header
            chunk: list[list[str]] = []
            start = 0
            for raw in reader:
                if len(raw) < width:
                    raw = raw + [""] * (width - len(raw))
                elif len(raw) > width:
                    raw = raw[:width]
                chunk.append(raw)
                if len(chunk) >= self.chunk_size:
                    yield RowBatch(rows=chunk, start_index=start)
                    start += len(chunk)
                    chunk = []
            if chunk:
                yield RowBatch(rows=chunk, start_index=start)


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


class SqliteSource(TabularSource):
    def __init__(self, location: Path, table: str, chunk_size: int,
                 dataset_name: str | None):
        self.format = "sqlite"
        self.location = location
        self.table = table
        self.chunk_size = chunk_size
        self.dataset_name = dataset_name
        with self._connect() as conn:
            names = {r[0] for r in conn.execute(
                "SELECT name FROM sqlite_master WHERE type IN ('table','view')")}
            if table not in names:
                raise UnknownTable(f"{location}: no table named {table!r}")
            cur = conn.execute(f"SELECT * FROM {_quote_ident(table)} LIMIT 0")
            self.columns = [d[0] for d in cur.description]
            self.row_count_hint = conn.execute(
                f"SELECT COUNT(*) FROM {_quote_ident(table)}").fetchone()[0]

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(f"file:{self.location}?mode=ro", uri=True)
        try:
            conn.execute("SELECT 1 FROM sqlite_master LIMIT 1")
        except sqlite3.DatabaseError as exc:
            conn.close()
            raise BadFormat(f"{self.location}: not a SQLite database: {exc}") from None
        return conn

    def batches(self) -> Iterator[RowBatch]:
        conn = self._connect()
        try:
            cur = conn.execute(f"SELECT * FROM {_quote_ident(self.table)}")
            start = 0
            while True:
                fetched = cur.fetchmany(self.chunk_size)
                if not fetched:
                    break
                rows = [["" if cell is None else str(cell) for cell in r]
                        for r in fetched]
                yield RowBatch(rows=rows, start_index=start)
                start += len(rows)
        finally:
            conn.close()


def open_source(fmt: str, location: str | Path, table: str | None = None,
                chunk_size: int = DEFAULT_CHUNK_SIZE,
                dataset_name: str | None = None) -> TabularSource:
    """Open a tabular source for streaming. fmt is ``csv`` or ``sqlite``;
    sas7bdat and rds are rejected with a conversion hint."""
    fmt = fmt.lower()
    if fmt in ("sas7bdat", "rds"):
        raise UnsupportedFormat(fmt, _CONVERT_HINT)
    if fmt not in ("csv", "sqlite"):
        raise UnsupportedFormat(fmt)
    location = Path(location)
    if not location.is_file():
        raise NotFound(f"no such file: {location}")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    if fmt == "csv":
        return CsvSource(location, chunk_size, dataset_name)
    if table is None:
        raise UnknownTable(f"{location}: sqlite sources need a table name")
    return SqliteSource(location, table, chunk_size, dataset_name)


# --- sinks -----------------------------------------------------------------

class RowSink:
    """Order-preserving writer of recoded rows; one run owns it exclusively."""

    columns: list[str]

    def write_row(self, row: dict[str, OutputValue]) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError

    def __enter__(self) -> "RowSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _render(self, row: dict[str, OutputValue]) -> list[str]:
        if list(row.keys()) != self.columns:
            raise ColumnMismatch(
                f"row columns {list(row.keys())} != sink columns {self.columns}")
        return [render_value(v) for v in row.values()]


class CsvSink(RowSink):
    def __init__(self, location: Path, columns: list[str]):
        self.columns = list(columns)
        self._fh = location.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(self.columns)

    def write_row(self, row: dict[str, OutputValue]) -> None:
        self._writer.writerow(self._render(row))

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


class SqliteSink(RowSink):
    _BATCH = 1000

    def __init__(self, location: Path, table: str, columns: list[str]):
        self.columns = list(columns)
        self.table = table
        self._conn = sqlite3.connect(location)
        cols = ", ".join(f"{_quote_ident(c)} TEXT" for c in columns)
        self._conn.execute(f"DROP TABLE IF EXISTS {_quote_ident(table)}")
        self._conn.execute(f"CREATE TABLE {_quote_ident(table)} ({cols})")
        placeholders = ", ".join("?" for _ in columns)
        self._insert = (f"INSERT INTO {_quote_ident(table)} "
                        f"VALUES ({placeholders})")
        self._pending: list[list[str]] = []

    def write_row(self, row: dict[str, OutputValue]) -> None:
        self._pending.append(self._render(row))
        if len(self._pending) >= self._BATCH:
            self._flush()

    def _flush(self) -> None:
        if self._pending:
            self._conn.executemany(self._insert, self._pending)
            self._pending = []

    def close(self) -> None:
        self._flush()
        self._conn.commit()
        self._conn.close()


def open_sink(fmt: str, location: str | Path, columns: list[str],
              table: str | None = None) -> RowSink:
    """Open a row writer. NA values serialize as NA(a)/NA(b)/NA(c) literals
    in both formats; SQLite columns get TEXT affinity."""
    fmt = fmt.lower()
    if fmt not in ("csv", "sqlite"):
        raise UnsupportedFormat(fmt)
    location = Path(location)
    if fmt == "csv":
        return CsvSink(location, columns)
    return SqliteSink(location, table or "recoded", columns)


def count_missing(source: TabularSource) -> tuple[int, float]:
    """Exact count and fraction of missing cells, using the same
    null-detection rules the recode engine applies."""
    missing = 0
    total = 0
    width = len(source.columns)
    for batch in source.batches():
        for row in batch.rows:
            total += width
            for cell in row:
                if is_missing(cell):
                    missing += 1
    fraction = missing / total if total else 0.0
    return missing, fraction
