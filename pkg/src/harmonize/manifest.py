"""Run manifests: hash-based records that make a recode run mechanically
reproducible. Re-running with inputs whose hashes match the manifest must
reproduce the recorded output hash bit for bit."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

MANIFEST_SCHEMA_VERSION = 1


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(*, engine_version: str, variables_csv: bytes, details_csv: bytes,
                   source_path: str | Path, source_format: str,
                   source_table: str | None, database: str,
                   selected: list[str], passthrough: list[str],
                   dvl_entries: list[dict], chunk_size: int,
                   output_path: str | Path, strict_unmatched: bool = False) -> dict:
    source_path = Path(source_path)
    return {
        "schemaVersion": MANIFEST_SCHEMA_VERSION,
        "engineVersion": engine_version,
        "createdAt": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "sheets": {
            "variablesSha256": sha256_bytes(variables_csv),
            "detailsSha256": sha256_bytes(details_csv),
        },
        "source": {
            "path": str(source_path),
            "format": source_format,
            "table": source_table,
            "sizeBytes": source_path.stat().st_size,
            "sha256": sha256_file(source_path),
        },
        "database": database,
        "selected": list(selected),
        "passthrough": list(passthrough),
        "dvlEntries": dvl_entries,
        "chunkSize": chunk_size,
        "strictUnmatched": strict_unmatched,
        "output": {
            "path": str(output_path),
            "sha256": sha256_file(output_path),
        },
    }


def write_manifest(manifest: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def output_matches(manifest: dict, output_path: str | Path) -> bool:
    """True iff the file at output_path hashes to the recorded output hash."""
    return sha256_file(output_path) == manifest["output"]["sha256"]
