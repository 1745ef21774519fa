"""Command-line front door: validate sheets, summarize variables, run
recodes, manage the derived variable library, and serve the HTTP API.

Exit codes are part of the contract: 0 success, 1 validation failure,
2 I/O problem, 3 plan/derivation problem, 4 internal error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .dvl import DerivedVariableLibrary, DerivedVariableSpec
from .engine import apply_from_dvl, compile_plan, recode_stream
from .errors import (
    DvlError,
    ExprError,
    HarmonizeError,
    PlanError,
    SheetError,
    SourceError,
)
from .manifest import build_manifest, load_manifest, write_manifest
from .sheets import parse_details_sheet, parse_variable_sheet, validate_sheets
from .summary import DEFAULT_TOP_K, summarize_variable
from .tabio import DEFAULT_CHUNK_SIZE, open_sink, open_source

EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_PLAN = 3
EXIT_INTERNAL = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _exit_code_for(exc: Exception) -> int:
    if isinstance(exc, SheetError):
        return EXIT_VALIDATION
    if isinstance(exc, (SourceError, OSError)):
        return EXIT_IO
    if isinstance(exc, (PlanError, DvlError, ExprError)):
        return EXIT_PLAN
    return EXIT_INTERNAL


def _guard(func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except (HarmonizeError, OSError) as exc:
        _fail(_exit_code_for(exc), str(exc))


def _normalize_section(cmd: click.Command, section: dict) -> dict:
    # config files use flag names ("chunk-size"); click's default_map wants
    # parameter names ("chunk_size", and renamed ones like "source_path")
    alias: dict[str, str] = {}
    for p in cmd.params:
        for opt in getattr(p, "opts", []):
            if opt.startswith("--"):
                alias[opt[2:]] = p.name
                alias[opt[2:].replace("-", "_")] = p.name
    if isinstance(cmd, click.Group):
        return {k: (_normalize_section(cmd.commands[k], v)
                    if k in cmd.commands and isinstance(v, dict) else v)
                for k, v in section.items()}
    return {alias.get(k, k): v for k, v in section.items()}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_VALIDATION, f"bad config file: {exc}")
    return {k: (_normalize_section(main.commands[k], v)
                if k in main.commands and isinstance(v, dict) else v)
            for k, v in raw.items()}


@click.group()
@click.version_option(__version__)
@click.option("--config", type=click.Path(), default=None,
              help="JSON config file supplying flag defaults (flags win).")
@click.pass_context
def main(ctx: click.Context, config: str | None) -> None:
    """Metadata-driven recoding of tabular health/survey data."""
    ctx.default_map = _load_config(config)


def _sheet_pair(variables: str, details: str):
    vs = _guard(parse_variable_sheet, Path(variables).read_bytes())
    ds = _guard(parse_details_sheet, Path(details).read_bytes())
    return vs, ds


@main.command()
@click.option("--variables", required=True, type=click.Path(exists=True))
@click.option("--details", required=True, type=click.Path(exists=True))
def validate(variables: str, details: str) -> None:
    """Validate a variable sheet and details sheet pair."""
    vs, ds = _sheet_pair(variables, details)
    report = validate_sheets(vs, ds)
    for f in report.findings:
        click.echo(f"{f.severity}: {f.location}: {f.message}")
    if report.ok:
        click.echo(f"ok: {len(vs.entries)} variables, {len(ds.rows)} detail rows"
                   + (f", {len(report.warnings)} warning(s)" if report.warnings else ""))
    else:
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.option("--source", "source_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "sqlite"]))
@click.option("--table", default=None)
@click.option("--column", required=True)
@click.option("--top-k", default=DEFAULT_TOP_K, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
def summarize(source_path: str, fmt: str, table: str | None, column: str,
              top_k: int, as_json: bool) -> None:
    """Summarize one column of a source table."""
    source = _guard(open_source, fmt, source_path, table=table)
    summary = _guard(summarize_variable, source, column, top_k)
    if as_json:
        click.echo(json.dumps(summary.to_dict(), indent=2))
        return
    click.echo(f"{summary.name}: {summary.sniffed_type}, "
               f"{summary.n_rows} rows, {summary.n_missing} missing, "
               f"{summary.distinct_count} distinct")
    if summary.numeric:
        n = summary.numeric
        click.echo(f"  min {n['min']}  max {n['max']}  "
                   f"mean {n['mean']:.4g}  median {n['median']}")
    for value, count in summary.top_categories:
        click.echo(f"  {value!r}: {count}")


def _split_csv_arg(arg: str | None) -> list[str]:
    if not arg:
        return []
    return [p.strip() for p in arg.split(",") if p.strip()]


def _sink_format(out: str) -> str:
    suffix = Path(out).suffix.lower()
    return "sqlite" if suffix in (".db", ".sqlite", ".sqlite3") else "csv"


@main.command()
@click.option("--source", "source_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "sqlite"]))
@click.option("--table", default=None, help="Source table (sqlite only).")
@click.option("--variables", required=True, type=click.Path(exists=True))
@click.option("--details", required=True, type=click.Path(exists=True))
@click.option("--database", required=True)
@click.option("--select", "select_arg", required=True,
              help="Comma-separated recoded variable names.")
@click.option("--passthrough", "passthrough_arg", default="",
              help="Comma-separated source columns to copy verbatim.")
@click.option("--out", required=True, type=click.Path(),
              help="Output file; .db/.sqlite extension selects SQLite.")
@click.option("--out-table", default="recoded", show_default=True)
@click.option("--chunk-size", default=DEFAULT_CHUNK_SIZE, show_default=True)
@click.option("--dvl", "dvl_dir", default=None, type=click.Path(),
              help="Derived variable library directory.")
@click.option("--derive", "derive_arg", default="",
              help="Comma-separated DVL variable names to apply.")
@click.option("--strict-unmatched", is_flag=True,
              help="Error on non-missing values matched by no rule.")
@click.option("--manifest", "manifest_path", default=None, type=click.Path(),
              help="Where to write the run manifest (default: OUT.manifest.json).")
def recode(source_path: str, fmt: str, table: str | None, variables: str,
           details: str, database: str, select_arg: str, passthrough_arg: str,
           out: str, out_table: str, chunk_size: int, dvl_dir: str | None,
           derive_arg: str, strict_unmatched: bool,
           manifest_path: str | None) -> None:
    """Recode a dataset according to the two sheets."""
    variables_csv = Path(variables).read_bytes()
    details_csv = Path(details).read_bytes()
    vs = _guard(parse_variable_sheet, variables_csv)
    ds = _guard(parse_details_sheet, details_csv)
    selected = _split_csv_arg(select_arg)
    passthrough = _split_csv_arg(passthrough_arg)
    derive = _split_csv_arg(derive_arg)

    plan = _guard(compile_plan, vs, ds, database, selected, passthrough,
                  strict_unmatched)
    dvl_entries: list[dict] = []
    if derive:
        if not dvl_dir:
            _fail(EXIT_PLAN, "--derive requires --dvl DIR")
        lib = _guard(DerivedVariableLibrary.load, dvl_dir)
        plan = _guard(apply_from_dvl, plan, lib, derive)
        dvl_entries = [{"name": n, "contentHash": lib.get_version(n).contentHash}
                       for n in derive]

    source = _guard(open_source, fmt, source_path, table=table,
                    chunk_size=chunk_size)
    sink = _guard(open_sink, _sink_format(out), out, plan.output_columns,
                  table=out_table)
    try:
        stats = _guard(recode_stream, plan, source, sink)
    finally:
        sink.close()

    stats_path = Path(out).with_name(Path(out).name + ".stats.json")
    stats_path.write_text(json.dumps(stats.to_dict(), indent=2) + "\n",
                          encoding="utf-8")
    manifest = build_manifest(
        engine_version=__version__,
        variables_csv=variables_csv,
        details_csv=details_csv,
        source_path=source_path,
        source_format=fmt,
        source_table=table,
        database=database,
        selected=selected,
        passthrough=passthrough,
        dvl_entries=dvl_entries,
        chunk_size=chunk_size,
        output_path=out,
        strict_unmatched=strict_unmatched,
    )
    manifest_file = manifest_path or str(Path(out).with_name(Path(out).name + ".manifest.json"))
    write_manifest(manifest, manifest_file)
    click.echo(f"recoded {stats.rows_in} rows -> {out} "
               f"({len(plan.output_columns)} columns); manifest: {manifest_file}")


@main.group()
def dvl() -> None:
    """Manage a derived variable library directory."""


@dvl.command("add")
@click.option("--dir", "directory", required=True, type=click.Path())
@click.option("--name", default=None)
@click.option("--components", default=None, help="Comma-separated component names.")
@click.option("--function-name", default=None)
@click.option("--body", default=None, help="Expression source text.")
@click.option("--output-type", default=None, type=click.Choice(["categorical", "continuous"]))
@click.option("--notes", default=None)
@click.option("--author", default=None)
@click.option("--from-doc", "doc_path", default=None, type=click.Path(exists=True),
              help="Merge every entry of a documentation CSV instead.")
def dvl_add(directory: str, name: str | None, components: str | None,
            function_name: str | None, body: str | None,
            output_type: str | None, notes: str | None, author: str | None,
            doc_path: str | None) -> None:
    """Add a derived variable (or merge a documentation CSV)."""
    directory = Path(directory)
    lib = (_guard(DerivedVariableLibrary.load, directory)
           if (directory / "catalog.csv").exists() else DerivedVariableLibrary())
    if doc_path:
        incoming = _guard(DerivedVariableLibrary.from_doc, Path(doc_path).read_bytes())
        for row in incoming.catalog():
            v = incoming.get_version(row["name"], row["version"])
            lib.add(v.spec, author=v.author, created_at=v.createdAt)
    else:
        if not all([name, components, function_name, body, output_type]):
            _fail(EXIT_PLAN, "either --from-doc or all of --name/--components/"
                             "--function-name/--body/--output-type are required")
        spec = _guard(DerivedVariableSpec,
                      name=name,
                      components=tuple(_split_csv_arg(components)),
                      functionName=function_name,
                      functionBody=body,
                      outputType=output_type,
                      notes=notes)
        digest = lib.add(spec, author=author or os.environ.get("USER", "unknown"))
        click.echo(f"{name}: {digest}")
    _guard(lib.save, directory)


@dvl.command("list")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def dvl_list(directory: str, as_json: bool) -> None:
    """List every entry and version in the library."""
    lib = _guard(DerivedVariableLibrary.load, directory)
    rows = lib.catalog()
    if as_json:
        click.echo(json.dumps(rows, indent=2))
        return
    for row in rows:
        click.echo(f"{row['name']} v{row['version']}  {row['contentHash'][:12]}  "
                   f"{row['outputType']}  by {row['author']} at {row['createdAt']}")


@dvl.command("show")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True))
@click.option("--name", required=True)
@click.option("--version", "version", default=None, type=int)
def dvl_show(directory: str, name: str, version: int | None) -> None:
    """Print one derived variable definition as JSON."""
    lib = _guard(DerivedVariableLibrary.load, directory)
    v = _guard(lib.get_version, name, version)
    click.echo(json.dumps({
        "name": v.spec.name,
        "version": v.version,
        "components": list(v.spec.components),
        "functionName": v.spec.functionName,
        "functionBody": v.spec.functionBody,
        "outputType": v.spec.outputType,
        "notes": v.spec.notes,
        "contentHash": v.contentHash,
        "author": v.author,
        "createdAt": v.createdAt,
    }, indent=2))


@dvl.command("export")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True))
@click.option("--out", default="-", help="Output file, - for stdout.")
@click.option("--names", default=None,
              help="Comma-separated subset (latest versions); default: everything.")
def dvl_export(directory: str, out: str, names: str | None) -> None:
    """Export the documentation CSV."""
    lib = _guard(DerivedVariableLibrary.load, directory)
    doc = _guard(lib.export_doc, _split_csv_arg(names) if names else None)
    if out == "-":
        sys.stdout.buffer.write(doc)
    else:
        Path(out).write_bytes(doc)


@main.command()
@click.option("--host", default=None, help="Bind address (env HARMONIZE_HOST).")
@click.option("--port", default=None, type=int, help="Port (env HARMONIZE_PORT).")
@click.option("--dvl", "dvl_dir", default=None, type=click.Path(),
              help="DVL directory the service exposes.")
def serve(host: str | None, port: int | None, dvl_dir: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    host = host or os.environ.get("HARMONIZE_HOST", "127.0.0.1")
    port = port or int(os.environ.get("HARMONIZE_PORT", "8642"))
    app = create_app(dvl_dir=dvl_dir)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path(),
              help="Recompute into this file instead of checking in place.")
def verify(manifest_path: str, out: str | None) -> None:
    """Check that a run manifest's recorded output hash still matches."""
    from .manifest import output_matches

    m = _guard(load_manifest, manifest_path)
    target = out or m["output"]["path"]
    if not Path(target).exists():
        _fail(EXIT_IO, f"output file missing: {target}")
    if output_matches(m, target):
        click.echo("output hash matches the manifest")
    else:
        _fail(EXIT_VALIDATION, "output hash differs from the manifest")


if __name__ == "__main__":
    main()
