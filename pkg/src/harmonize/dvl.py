"""Derived Variable Library (DVL).

A shareable, append-only catalog of derived-variable definitions. Each
entry is versioned; the content hash of the canonical JSON form of a
definition identifies it, so re-adding an identical definition is an
idempotent no-op. On disk a library is a directory holding ``catalog.csv``
plus one ``specs/<hash>.json`` file per version, which makes libraries
diffable and shareable by plain copy.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import DvlError, UnknownName
from .exprlang import check_expr, free_idents, parse_expression
from .sheets import TYPES

log = logging.getLogger(__name__)

DOC_COLUMNS = ["name", "components", "functionName", "functionBody",
               "outputType", "contentHash", "author", "createdAt"]


@dataclass(frozen=True)
class DerivedVariableSpec:
    """One derived variable: a named expression over recoded components."""

    name: str
    components: tuple[str, ...]
    functionName: str
    functionBody: str
    outputType: str  # categorical | continuous
    notes: str | None = None

    def __post_init__(self) -> None:
        if not self.components:
            raise DvlError(f"derived variable {self.name!r} has no components")
        if len(set(self.components)) != len(self.components):
            raise DvlError(f"derived variable {self.name!r} has duplicate components")
        if self.outputType not in TYPES:
            raise DvlError(f"derived variable {self.name!r}: bad outputType "
                           f"{self.outputType!r}")
        # the body must parse and may only reference declared components;
        # full type checking happens when component types are known at plan time
        expr = parse_expression(self.functionBody)
        unknown = free_idents(expr) - set(self.components)
        if unknown:
            raise DvlError(f"derived variable {self.name!r} references undeclared "
                           f"names: {sorted(unknown)}")

    def canonical_json(self) -> str:
        payload = {
            "name": self.name,
            "components": list(self.components),
            "functionName": self.functionName,
            "functionBody": self.functionBody,
            "outputType": self.outputType,
            "notes": self.notes,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def check_types(self, component_types: dict[str, str]) -> str:
        """Type-check the body against actual component types; returns the
        inferred output type and verifies it matches the declared one."""
        expr = parse_expression(self.functionBody)
        inferred = check_expr(expr, {c: component_types[c] for c in self.components})
        if inferred != self.outputType:
            raise DvlError(f"derived variable {self.name!r} declared "
                           f"{self.outputType} but its expression yields {inferred}")
        return inferred


@dataclass(frozen=True)
class DvlVersion:
    spec: DerivedVariableSpec
    version: int
    contentHash: str
    author: str
    createdAt: str


def _spec_from_dict(payload: dict) -> DerivedVariableSpec:
    return DerivedVariableSpec(
        name=payload["name"],
        components=tuple(payload["components"]),
        functionName=payload["functionName"],
        functionBody=payload["functionBody"],
        outputType=payload["outputType"],
        notes=payload.get("notes"),
    )


class DerivedVariableLibrary:
    """Versioned repository of derived-variable definitions."""

    def __init__(self) -> None:
        self._entries: dict[str, list[DvlVersion]] = {}

    def add(self, spec: DerivedVariableSpec, author: str,
            created_at: str | None = None) -> str:
        """Append a new version; identical content is a warned no-op.
        Returns the content hash either way."""
        digest = spec.content_hash()
        versions = self._entries.setdefault(spec.name, [])
        for v in versions:
            if v.contentHash == digest:
                log.warning("DVL already holds %s@%s; add is a no-op",
                            spec.name, digest[:12])
                return digest
        when = created_at or datetime.now(timezone.utc).isoformat(timespec="seconds")
        versions.append(DvlVersion(spec=spec, version=len(versions) + 1,
                                   contentHash=digest, author=author, createdAt=when))
        return digest

    def get(self, name: str, version: int | None = None) -> DerivedVariableSpec:
        return self.get_version(name, version).spec

    def get_version(self, name: str, version: int | None = None) -> DvlVersion:
        if name not in self._entries:
            raise UnknownName(name)
        versions = self._entries[name]
        if version is None:
            return versions[-1]
        for v in versions:
            if v.version == version:
                return v
        raise UnknownName(f"{name}@{version}")

    def names(self) -> list[str]:
        return sorted(self._entries)

    def catalog(self) -> list[dict]:
        rows = []
        for name in self.names():
            for v in self._entries[name]:
                rows.append({
                    "name": name,
                    "version": v.version,
                    "contentHash": v.contentHash,
                    "author": v.author,
                    "createdAt": v.createdAt,
                    "components": list(v.spec.components),
                    "functionName": v.spec.functionName,
                    "outputType": v.spec.outputType,
                })
        return rows

    # -- documentation CSV --------------------------------------------------

    def export_doc(self, names: list[str] | None = None) -> bytes:
        """The shareable 'derived variables description' CSV. With names
        given, exports the latest version of exactly those (one row per
        derived column of a run); otherwise every stored version."""
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(DOC_COLUMNS)
        if names is not None:
            picked = [self.get_version(n) for n in names]
        else:
            picked = [v for n in self.names() for v in self._entries[n]]
        for v in picked:
            writer.writerow([
                v.spec.name, ",".join(v.spec.components), v.spec.functionName,
                v.spec.functionBody, v.spec.outputType, v.contentHash,
                v.author, v.createdAt,
            ])
        return buf.getvalue().encode("utf-8")

    @classmethod
    def from_doc(cls, data: bytes | str) -> "DerivedVariableLibrary":
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        reader = csv.DictReader(io.StringIO(text, newline=""))
        missing = set(DOC_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise DvlError(f"documentation CSV missing columns: {sorted(missing)}")
        lib = cls()
        for row in reader:
            spec = DerivedVariableSpec(
                name=row["name"],
                components=tuple(c.strip() for c in row["components"].split(",") if c.strip()),
                functionName=row["functionName"],
                functionBody=row["functionBody"],
                outputType=row["outputType"],
            )
            digest = spec.content_hash()
            if row["contentHash"] and row["contentHash"] != digest:
                raise DvlError(f"content hash mismatch for {spec.name!r}: "
                               f"file says {row['contentHash'][:12]}, "
                               f"computed {digest[:12]}")
            lib.add(spec, author=row["author"] or "unknown",
                    created_at=row["createdAt"] or None)
        return lib

    # -- directory persistence ----------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        specs_dir = directory / "specs"
        specs_dir.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "version", "contentHash", "author", "createdAt"])
        for name in self.names():
            for v in self._entries[name]:
                writer.writerow([name, v.version, v.contentHash, v.author, v.createdAt])
                spec_path = specs_dir / f"{v.contentHash}.json"
                if not spec_path.exists():
                    spec_path.write_text(v.spec.canonical_json(), encoding="utf-8")
        (directory / "catalog.csv").write_text(buf.getvalue(), encoding="utf-8")

    @classmethod
    def load(cls, directory: str | Path) -> "DerivedVariableLibrary":
        directory = Path(directory)
        catalog = directory / "catalog.csv"
        if not catalog.exists():
            raise DvlError(f"not a DVL directory (no catalog.csv): {directory}")
        lib = cls()
        with catalog.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                spec_path = directory / "specs" / f"{row['contentHash']}.json"
                if not spec_path.exists():
                    raise DvlError(f"catalog references missing spec file: {spec_path.name}")
                spec = _spec_from_dict(json.loads(spec_path.read_text(encoding="utf-8")))
                digest = spec.content_hash()
                if digest != row["contentHash"]:
                    raise DvlError(f"spec file {spec_path.name} content hash mismatch")
                lib.add(spec, author=row["author"], created_at=row["createdAt"])
        return lib
