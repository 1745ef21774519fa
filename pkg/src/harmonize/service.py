"""HTTP service exposing the engine for the companion web UI and for
headless clients.

Sessions are in-memory with a TTL; each session holds one open source plus
a working pair of sheets, revalidated on every mutation. Recode runs are
asynchronous jobs polled by id, and a completed job's result bytes never
change. Every recode reachable here goes through exactly the same plan
compilation and streaming code as the CLI, so outputs are byte-identical
given the same inputs.
"""

from __future__ import annotations

import csv
import io
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel

from . import __version__
from .dvl import DerivedVariableLibrary, DerivedVariableSpec
from .engine import apply_from_dvl, compile_plan, recode_stream
from .errors import (
    HarmonizeError,
    NotFound,
    PlanError,
    SheetError,
    SourceError,
    UnknownColumn,
    UnknownName,
    UnknownTable,
)
from .exprlang import check_expr, parse_expression
from .sheets import (
    DETAILS_COLUMNS,
    DetailsSheet,
    VariableSheet,
    parse_details_sheet,
    parse_variable_sheet,
    serialize_details_sheet,
    serialize_variable_sheet,
    validate_sheets,
)
from .summary import DEFAULT_TOP_K, summarize_variable
from .tabio import DEFAULT_CHUNK_SIZE, open_sink, open_source

SESSION_TTL_SECONDS = 2 * 60 * 60
UPLOAD_CAP_BYTES = 1 << 30  # larger data should connect via the SQLite path

_EMPTY_VARIABLES = b"variable,label,labelLong,section,variableType,units,databaseStart,variableStart\n"
_EMPTY_DETAILS = (",".join(DETAILS_COLUMNS) + "\n").encode()


@dataclass
class Session:
    id: str
    source: Any
    workdir: Path
    variables: VariableSheet
    details: DetailsSheet
    created_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)
    job_id: str | None = None


@dataclass
class Job:
    id: str
    session_id: str
    state: str = "queued"  # queued | running | done | error
    progress_rows: int = 0
    stats: dict | None = None
    result_path: Path | None = None
    result_name: str = "recoded.csv"
    error: str | None = None


class OpenSessionBody(BaseModel):
    format: str
    location: Optional[str] = None
    content: Optional[str] = None  # inline upload, UTF-8 CSV text
    table: Optional[str] = None
    name: Optional[str] = None
    chunkSize: int = DEFAULT_CHUNK_SIZE


class DetailsRowBody(BaseModel):
    rowSpec: dict[str, str]


class RecodeBody(BaseModel):
    database: str
    selected: list[str]
    passthrough: list[str] = []
    outputFormat: str = "csv"
    outputTable: str = "recoded"
    chunkSize: Optional[int] = None
    dvlNames: list[str] = []
    strictUnmatched: bool = False


class DvlSpecBody(BaseModel):
    name: str
    components: list[str]
    functionName: str
    functionBody: str
    outputType: str
    notes: Optional[str] = None
    author: str = "api"


class ExprCheckBody(BaseModel):
    body: str
    componentTypes: dict[str, str] = {}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str,
                 location: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.location = location


def _error_response(status: int, code: str, message: str,
                    location: str | None = None) -> JSONResponse:
    body = {"code": code, "message": message}
    if location:
        body["location"] = location
    return JSONResponse(status_code=status, content=body)


def create_app(dvl_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="harmonize", version=__version__)
    sessions: dict[str, Session] = {}
    jobs: dict[str, Job] = {}
    state_dir = Path(tempfile.mkdtemp(prefix="harmonize-svc-"))

    if dvl_dir and Path(dvl_dir, "catalog.csv").exists():
        library = DerivedVariableLibrary.load(dvl_dir)
    else:
        library = DerivedVariableLibrary()
    library_path = Path(dvl_dir) if dvl_dir else None
    library_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message, exc.location)

    @app.exception_handler(HarmonizeError)
    async def _domain_error(request: Request, exc: HarmonizeError):
        if isinstance(exc, (NotFound, UnknownTable, UnknownColumn, UnknownName)):
            status = 404
        elif isinstance(exc, SheetError):
            status = 422
        elif isinstance(exc, (SourceError, PlanError)):
            status = 400
        else:
            status = 500
        return _error_response(status, type(exc).__name__, str(exc))

    def _session(session_id: str) -> Session:
        now = time.time()
        for sid in list(sessions):
            if now - sessions[sid].created_at > SESSION_TTL_SECONDS:
                del sessions[sid]
        if session_id not in sessions:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        return sessions[session_id]

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def open_session(body: OpenSessionBody):
        workdir = Path(tempfile.mkdtemp(prefix="sess-", dir=state_dir))
        if body.content is not None:
            data = body.content.encode("utf-8")
            if len(data) > UPLOAD_CAP_BYTES:
                raise ApiError(413, "UploadTooLarge",
                               "upload exceeds the cap; connect a SQLite file instead")
            location = workdir / "upload.csv"
            location.write_bytes(data)
        elif body.location:
            location = Path(body.location)
        else:
            raise ApiError(400, "BadRequest", "need either location or content")
        source = open_source(body.format, location, table=body.table,
                             chunk_size=body.chunkSize, dataset_name=body.name)
        session = Session(
            id=uuid.uuid4().hex,
            source=source,
            workdir=workdir,
            variables=parse_variable_sheet(_EMPTY_VARIABLES),
            details=parse_details_sheet(_EMPTY_DETAILS),
        )
        sessions[session.id] = session
        return {"sessionId": session.id, "columns": source.columns,
                "rowCountHint": source.row_count_hint,
                "datasetName": source.dataset_name}

    @app.get("/sessions/{session_id}/summary/{column}")
    def column_summary(session_id: str, column: str, k: int = DEFAULT_TOP_K):
        session = _session(session_id)
        return summarize_variable(session.source, column, k).to_dict()

    # -- sheets -------------------------------------------------------------

    def _sheet_response(data: bytes) -> Response:
        return Response(content=data, media_type="text/csv; charset=utf-8")

    @app.get("/sessions/{session_id}/sheets/variables")
    def get_variables(session_id: str):
        return _sheet_response(serialize_variable_sheet(_session(session_id).variables))

    @app.get("/sessions/{session_id}/sheets/details")
    def get_details(session_id: str):
        return _sheet_response(serialize_details_sheet(_session(session_id).details))

    @app.put("/sessions/{session_id}/sheets/variables")
    async def put_variables(session_id: str, request: Request):
        session = _session(session_id)
        sheet = parse_variable_sheet(await request.body())  # 422 via handler
        with session.lock:
            session.variables = sheet
            report = validate_sheets(session.variables, session.details)
        return {"report": report.to_dict()}

    @app.put("/sessions/{session_id}/sheets/details")
    async def put_details(session_id: str, request: Request):
        session = _session(session_id)
        sheet = parse_details_sheet(await request.body())
        with session.lock:
            session.details = sheet
            report = validate_sheets(session.variables, session.details)
        return {"report": report.to_dict()}

    @app.post("/sessions/{session_id}/details-rows")
    def add_details_row(session_id: str, body: DetailsRowBody):
        session = _session(session_id)
        with session.lock:
            current = serialize_details_sheet(session.details).decode("utf-8")
            header = current.splitlines()[0].split(",")
            buf = io.StringIO(newline="")
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow([body.rowSpec.get(col, "") for col in header])
            session.details = parse_details_sheet(current + buf.getvalue())
            report = validate_sheets(session.variables, session.details)
        row = session.details.rows[-1]
        return {"rowIndex": len(session.details.rows), "variable": row.variable,
                "report": report.to_dict()}

    @app.delete("/sessions/{session_id}/details-rows/{index}")
    def delete_details_row(session_id: str, index: int):
        session = _session(session_id)
        with session.lock:
            # row 0 means "delete nothing"
            if index != 0:
                if index < 0 or index > len(session.details.rows):
                    raise ApiError(404, "UnknownRow",
                                   f"no details row {index} (1-based)")
                rows = list(session.details.rows)
                del rows[index - 1]
                session.details = DetailsSheet(
                    rows=tuple(rows), extra_columns=session.details.extra_columns)
            report = validate_sheets(session.variables, session.details)
        return {"rows": len(session.details.rows), "report": report.to_dict()}

    # -- recode jobs --------------------------------------------------------

    def _run_job(job: Job, session: Session, body: RecodeBody) -> None:
        try:
            job.state = "running"
            plan = compile_plan(session.variables, session.details, body.database,
                                body.selected, body.passthrough,
                                body.strictUnmatched)
            if body.dvlNames:
                with library_lock:
                    plan = apply_from_dvl(plan, library, body.dvlNames)
            source = session.source
            if body.chunkSize:
                source = open_source(source.format, source.location,
                                     table=source.table, chunk_size=body.chunkSize,
                                     dataset_name=source.dataset_name)
            suffix = ".db" if body.outputFormat == "sqlite" else ".csv"
            out_path = session.workdir / f"result-{job.id}{suffix}"
            sink = open_sink(body.outputFormat, out_path, plan.output_columns,
                             table=body.outputTable)

            def progress(rows: int) -> None:
                job.progress_rows = rows

            try:
                stats = recode_stream(plan, source, sink, progress)
            finally:
                sink.close()
            job.stats = stats.to_dict()
            job.result_path = out_path
            job.result_name = f"recoded{suffix}"
            job.state = "done"
        except Exception as exc:  # surfaced through job polling
            job.state = "error"
            job.error = str(exc)

    @app.post("/sessions/{session_id}/recode", status_code=202)
    def start_recode(session_id: str, body: RecodeBody):
        session = _session(session_id)
        with session.lock:
            if session.job_id and jobs[session.job_id].state in ("queued", "running"):
                raise ApiError(409, "JobRunning",
                               "this session already has an active recode job")
            job = Job(id=uuid.uuid4().hex, session_id=session_id)
            jobs[job.id] = job
            session.job_id = job.id
        threading.Thread(target=_run_job, args=(job, session, body),
                         daemon=True).start()
        return {"jobId": job.id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        if job_id not in jobs:
            raise ApiError(404, "UnknownJob", f"no job {job_id!r}")
        job = jobs[job_id]
        return {"state": job.state, "progressRows": job.progress_rows,
                "stats": job.stats, "error": job.error}

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str):
        if job_id not in jobs:
            raise ApiError(404, "UnknownJob", f"no job {job_id!r}")
        job = jobs[job_id]
        if job.state != "done" or job.result_path is None:
            raise ApiError(409, "JobNotDone", f"job is {job.state}")
        media = "text/csv" if job.result_path.suffix == ".csv" else "application/octet-stream"
        return FileResponse(job.result_path, media_type=media,
                            filename=job.result_name)

    # -- derived variable documentation / DVL -------------------------------

    @app.get("/sessions/{session_id}/derived-doc")
    def derived_doc(session_id: str):
        session = _session(session_id)
        doc_lib = DerivedVariableLibrary()
        for entry in session.variables.entries:
            if not entry.variableStart.is_derived:
                continue
            rows = session.details.for_variable(entry.variable)
            for row in rows:
                if row.functionBody is None:
                    continue
                func = row.recEnd
                if func.startswith("Func::"):
                    func = func[len("Func::"):]
                doc_lib.add(DerivedVariableSpec(
                    name=entry.variable,
                    components=row.variableStart.derived_components,
                    functionName=func,
                    functionBody=row.functionBody,
                    outputType=row.typeEnd,
                    notes=row.notes,
                ), author="session")
        return _sheet_response(doc_lib.export_doc())

    @app.post("/dvl", status_code=201)
    def dvl_add(body: DvlSpecBody):
        spec = DerivedVariableSpec(
            name=body.name, components=tuple(body.components),
            functionName=body.functionName, functionBody=body.functionBody,
            outputType=body.outputType, notes=body.notes)
        with library_lock:
            digest = library.add(spec, author=body.author)
            if library_path:
                library.save(library_path)
        return {"name": body.name, "contentHash": digest}

    @app.get("/dvl")
    def dvl_catalog():
        with library_lock:
            return {"entries": library.catalog()}

    @app.get("/dvl/{name}")
    def dvl_get(name: str, version: int | None = None):
        with library_lock:
            v = library.get_version(name, version)
        return {"name": v.spec.name, "version": v.version,
                "components": list(v.spec.components),
                "functionName": v.spec.functionName,
                "functionBody": v.spec.functionBody,
                "outputType": v.spec.outputType, "notes": v.spec.notes,
                "contentHash": v.contentHash, "author": v.author,
                "createdAt": v.createdAt}

    # -- expression feedback for the UI -------------------------------------

    @app.post("/expressions/check")
    def expr_check(body: ExprCheckBody):
        try:
            expr = parse_expression(body.body)
        except HarmonizeError as exc:
            return {"ok": False, "stage": "parse", "message": str(exc)}
        if body.componentTypes:
            try:
                out_type = check_expr(expr, body.componentTypes)
            except HarmonizeError as exc:
                return {"ok": False, "stage": "typecheck", "message": str(exc)}
            return {"ok": True, "outputType": out_type}
        return {"ok": True, "outputType": None}

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    return app
