"""HTTP/JSON facade over the library, builder, injector, and evaluator.

Endpoints are thin: every effect is reproducible through a library call.
Long operations (assembly) run as background jobs polled by id; everything
else is synchronous. A single optional bearer token guards all routes
except /health.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Depends, FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from . import errors
from .builder import (
    AttackScenario,
    GroundTruth,
    ScenarioStore,
    assemble,
    extract_ground_truth,
    validate_scenario,
)
from .injector import DiscardSink, FileSink, Injector, InterfaceSink, parse_timestamp
from .library import TraceLibrary
from .reports import ConditionSummary, aggregate, grade_reports, parse_reports, scores_to_csv
from .stats import compare_conditions

DEFAULT_MAX_UPLOAD = 512 * 1024 * 1024


@dataclass
class ServiceConfig:
    storage_root: Path
    auth_token: str | None = None
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD
    cancel_injections_on_shutdown: bool = True
    ui_dist: Path | None = None  # built web console; served at / when set


@dataclass
class JobRecord:
    id: str
    kind: str  # assemble | inject | evaluate
    state: str = "running"  # running | completed | failed
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )
    result_ref: dict | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "state": self.state,
            "created_at": self.created_at,
            "result_ref": self.result_ref if self.state == "completed" else None,
            "error": self.error,
        }


class JobRegistry:
    def __init__(self):
        self._jobs: dict[str, JobRecord] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, work) -> JobRecord:
        job = JobRecord(id=uuid.uuid4().hex[:12], kind=kind)
        with self._lock:
            self._jobs[job.id] = job

        def runner():
            try:
                result = work()
                with self._lock:
                    job.result_ref = result
                    job.state = "completed"
            except Exception as exc:
                with self._lock:
                    job.error = f"{type(exc).__name__}: {exc}"
                    job.state = "failed"

        threading.Thread(target=runner, daemon=True).start()
        return job

    def get(self, job_id: str) -> JobRecord:
        with self._lock:
            if job_id not in self._jobs:
                raise errors.NotFound(f"job {job_id} not found")
            return self._jobs[job_id]


_STATUS = {
    errors.NotFound: 404,
    errors.TraceInUse: 409,
    errors.AlreadyFinished: 409,
    errors.MalformedCapture: 422,
    errors.MalformedHeader: 422,
    errors.TruncatedPacket: 422,
    errors.RoleAddressAbsent: 422,
    errors.SchemaViolation: 422,
    errors.PastSchedule: 422,
    errors.OverlappingMap: 422,
    errors.ConflictingRoles: 422,
    errors.GroundTruthIncomplete: 422,
    errors.UnknownTrace: 422,
    errors.UnknownCondition: 422,
    errors.EmptyFile: 422,
    errors.ArityMismatch: 422,
    errors.SinkUnavailable: 409,
    errors.CapturePermissionDenied: 403,
}


def create_app(config: ServiceConfig) -> FastAPI:
    """Build the application with its own storage-backed state."""
    root = Path(config.storage_root)
    root.mkdir(parents=True, exist_ok=True)
    library = TraceLibrary(root)
    scenarios = ScenarioStore(root)
    injector = Injector()
    jobs = JobRegistry()
    assembled_dir = root / "assembled"
    assembled_dir.mkdir(exist_ok=True)

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        if config.cancel_injections_on_shutdown:
            for view in injector.list_sessions():
                if view.state in ("scheduled", "running"):
                    try:
                        injector.cancel(view.id)
                    except errors.SocbenchError:
                        pass

    app = FastAPI(title="socbench", version="0.1.0", lifespan=lifespan)
    app.state.library = library
    app.state.scenarios = scenarios
    app.state.injector = injector
    app.state.jobs = jobs
    app.state.config = config

    def authorize(request: Request) -> None:
        if config.auth_token is None or request.url.path == "/health":
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.auth_token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    @app.exception_handler(errors.SocbenchError)
    async def domain_error_handler(request: Request, exc: errors.SocbenchError):
        status = _STATUS.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- traces ---------------------------------------------------------------

    @app.get("/traces", dependencies=[Depends(authorize)])
    def list_traces(phase: str | None = None, q: str | None = None):
        return {"traces": [t.to_json() for t in library.list_traces(phase, q)]}

    @app.post("/traces", status_code=201, dependencies=[Depends(authorize)])
    async def add_trace(
        pcap: UploadFile = File(...), metadata: str = Form(...)
    ):
        blob = await pcap.read()
        if len(blob) > config.max_upload_bytes:
            raise HTTPException(status_code=413, detail="capture exceeds upload cap")
        try:
            meta = json.loads(metadata)
        except json.JSONDecodeError as exc:
            raise errors.SchemaViolation(f"metadata is not valid JSON: {exc}")
        if not isinstance(meta, dict):
            raise errors.SchemaViolation("metadata must be a JSON object")
        trace = library.add_trace(
            blob,
            name=meta.get("name", pcap.filename or "unnamed"),
            phase=meta.get("phase", ""),
            technique=meta.get("technique", ""),
            roles=meta.get("roles", {}),
            expected_answers=meta.get("expected_answers"),
        )
        return trace.to_json()

    @app.get("/traces/{trace_id}", dependencies=[Depends(authorize)])
    def get_trace(trace_id: str):
        return library.get_trace(trace_id).to_json()

    @app.get("/traces/{trace_id}/pcap", dependencies=[Depends(authorize)])
    def get_trace_pcap(trace_id: str):
        return Response(
            content=library.load_capture_bytes(trace_id),
            media_type="application/vnd.tcpdump.pcap",
        )

    @app.delete("/traces/{trace_id}", status_code=204, dependencies=[Depends(authorize)])
    def delete_trace(trace_id: str):
        library.remove_trace(trace_id)
        return Response(status_code=204)

    @app.get("/traces/random/{phase}", dependencies=[Depends(authorize)])
    def random_trace(phase: str, seed: int | None = None):
        return library.pick_random(phase, seed).to_json()

    # -- scenarios --------------------------------------------------------------

    @app.get("/scenarios", dependencies=[Depends(authorize)])
    def list_scenarios():
        return {"scenarios": [s.to_json() for s in scenarios.list_scenarios()]}

    @app.post("/scenarios", status_code=201, dependencies=[Depends(authorize)])
    async def create_scenario(request: Request):
        raw = await request.json()
        if isinstance(raw, dict) and not raw.get("id"):
            raw = {**raw, "id": uuid.uuid4().hex[:12]}
        scenario = AttackScenario.from_json(raw)
        scenarios.save_scenario(scenario)
        return scenario.to_json()

    @app.get("/scenarios/{scenario_id}", dependencies=[Depends(authorize)])
    def get_scenario(scenario_id: str):
        return scenarios.load_scenario(scenario_id).to_json()

    @app.put("/scenarios/{scenario_id}", dependencies=[Depends(authorize)])
    async def put_scenario(scenario_id: str, request: Request):
        raw = await request.json()
        if isinstance(raw, dict):
            raw = {**raw, "id": scenario_id}
        scenario = AttackScenario.from_json(raw)
        scenarios.save_scenario(scenario)
        return scenario.to_json()

    @app.delete(
        "/scenarios/{scenario_id}", status_code=204, dependencies=[Depends(authorize)]
    )
    def delete_scenario(scenario_id: str):
        scenarios.delete_scenario(scenario_id)
        return Response(status_code=204)

    @app.get("/scenarios/{scenario_id}/validate", dependencies=[Depends(authorize)])
    def validate(scenario_id: str):
        scenario = scenarios.load_scenario(scenario_id)
        notes = validate_scenario(scenario, library)
        return {"notes": [{"kind": n.kind, "message": n.message} for n in notes]}

    @app.post(
        "/scenarios/{scenario_id}/assemble",
        status_code=202,
        dependencies=[Depends(authorize)],
    )
    def assemble_scenario(scenario_id: str):
        scenario = scenarios.load_scenario(scenario_id)

        def work():
            attack = assemble(scenario, library)
            pcap_path = assembled_dir / f"{scenario_id}.pcap"
            truth_path = assembled_dir / f"{scenario_id}.json"
            from .pcap import write_capture

            pcap_path.write_bytes(write_capture(attack.capture))
            truth_path.write_text(
                json.dumps(attack.ground_truth.to_json(), indent=2) + "\n"
            )
            return {
                "capture": f"/scenarios/{scenario_id}/assembled/pcap",
                "ground_truth": f"/scenarios/{scenario_id}/assembled/truth",
                "packets": len(attack.capture.packets),
                "assembled_at": attack.assembled_at,
            }

        job = jobs.submit("assemble", work)
        return job.to_json()

    @app.get(
        "/scenarios/{scenario_id}/assembled/pcap", dependencies=[Depends(authorize)]
    )
    def assembled_pcap(scenario_id: str):
        path = assembled_dir / f"{scenario_id}.pcap"
        if not path.is_file():
            raise errors.NotFound(f"scenario {scenario_id} has no assembled capture")
        return Response(
            content=path.read_bytes(), media_type="application/vnd.tcpdump.pcap"
        )

    @app.get(
        "/scenarios/{scenario_id}/assembled/truth", dependencies=[Depends(authorize)]
    )
    def assembled_truth(scenario_id: str):
        path = assembled_dir / f"{scenario_id}.json"
        if not path.is_file():
            raise errors.NotFound(f"scenario {scenario_id} has no assembled truth")
        return json.loads(path.read_text())

    @app.get("/jobs/{job_id}", dependencies=[Depends(authorize)])
    def get_job(job_id: str):
        return jobs.get(job_id).to_json()

    # -- injections --------------------------------------------------------------

    @app.post("/injections", status_code=201, dependencies=[Depends(authorize)])
    async def start_injection(request: Request):
        body = await request.json()
        scenario_id = body.get("scenario_id")
        if not scenario_id:
            raise errors.SchemaViolation("scenario_id is required")
        sink_spec = body.get("sink") or {}
        kind = sink_spec.get("kind")
        if kind == "file":
            if not sink_spec.get("path"):
                raise errors.SchemaViolation("file sink needs a path")
            sink = FileSink(Path(sink_spec["path"]))
        elif kind == "interface":
            if not sink_spec.get("interface"):
                raise errors.SchemaViolation("interface sink needs an interface name")
            sink = InterfaceSink(sink_spec["interface"])
        elif kind == "discard":
            sink = DiscardSink()
        else:
            raise errors.SchemaViolation(
                "sink.kind must be 'file', 'interface', or 'discard'"
            )

        scheduled_start = body.get("scheduled_start")
        if scheduled_start is not None:
            try:
                scheduled_start = parse_timestamp(scheduled_start)
            except (TypeError, ValueError, AttributeError) as exc:
                raise errors.SchemaViolation(f"scheduled_start invalid: {exc}")

        scenario = scenarios.load_scenario(scenario_id)
        attack = assemble(scenario, library)
        background = None
        background_ref = body.get("background_ref") or scenario.background_ref
        if background_ref:
            background = library.load_capture(background_ref)
        view = injector.start_injection(
            attack, sink, scheduled_start=scheduled_start, background=background
        )
        return view.to_json()

    @app.get("/injections", dependencies=[Depends(authorize)])
    def list_injections():
        return {"injections": [v.to_json() for v in injector.list_sessions()]}

    @app.get("/injections/{session_id}", dependencies=[Depends(authorize)])
    def injection_status(session_id: str):
        return injector.status(session_id).to_json()

    @app.delete("/injections/{session_id}", dependencies=[Depends(authorize)])
    def cancel_injection(session_id: str):
        return injector.cancel(session_id).to_json()

    # -- report evaluation ---------------------------------------------------------

    @app.post("/reports/evaluate", dependencies=[Depends(authorize)])
    async def evaluate_reports(
        reports_csv: UploadFile = File(...),
        truth_refs: str = Form(""),
        alpha: float = Form(0.05),
        compare: bool = Form(False),
    ):
        blob = await reports_csv.read()
        if len(blob) > config.max_upload_bytes:
            raise HTTPException(status_code=413, detail="upload exceeds cap")
        refs = [ref.strip() for ref in truth_refs.split(",") if ref.strip()]
        if not refs:
            raise errors.SchemaViolation("truth_refs must list scenario id(s)")
        truths = []
        for ref in refs:
            path = assembled_dir / f"{ref}.json"
            if path.is_file():
                truths.append(GroundTruth.from_json(json.loads(path.read_text())))
            else:
                truths.append(extract_ground_truth(scenarios.load_scenario(ref), library))

        parsed, cleaning = parse_reports(blob, truths)
        graded = grade_reports(parsed, truths, cleaning)
        conditions = sorted({report.condition for report in parsed})
        summaries = aggregate(parsed, truths, conditions, cleaning)
        payload = {
            "groups": len(parsed),
            "conditions": conditions,
            "summaries": [s.to_json() for s in summaries],
            "graded": [g.to_json() for g in graded],
            "scores_csv": scores_to_csv(graded),
            "cleaning_log": cleaning.to_json(),
        }
        if compare:
            if len(summaries) != 2:
                raise errors.ArityMismatch(
                    f"comparison needs exactly two conditions, got {conditions}"
                )
            payload["comparison"] = compare_conditions(summaries, alpha).to_json()
        return payload

    # -- statistics -----------------------------------------------------------------

    @app.post("/stats/compare", dependencies=[Depends(authorize)])
    async def stats_compare(request: Request):
        body = await request.json()
        raw_summaries = body.get("summaries")
        if not isinstance(raw_summaries, list) or len(raw_summaries) != 2:
            raise errors.ArityMismatch("body.summaries must hold exactly two summaries")
        summaries = [ConditionSummary.from_json(raw) for raw in raw_summaries]
        alpha = float(body.get("alpha", 0.05))
        report = compare_conditions(summaries, alpha)
        if body.get("format") == "text":
            return PlainTextResponse(report.to_text())
        return report.to_json()

    if config.ui_dist is not None and Path(config.ui_dist).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.ui_dist, html=True), name="ui")

    return app


def serve(
    bind: str = "127.0.0.1:8080",
    storage_root: Path | str = "storage",
    auth_token: str | None = None,
    ui_dist: Path | str | None = None,
) -> None:
    """Run the service with uvicorn; blocks until shutdown."""
    import uvicorn

    host, _, port = bind.partition(":")
    config = ServiceConfig(
        storage_root=Path(storage_root),
        auth_token=auth_token,
        ui_dist=Path(ui_dist) if ui_dist else None,
    )
    app = create_app(config)
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080), log_level="info")
    except (OSError, ValueError) as exc:
        raise errors.BindFailure(f"cannot serve on {bind}: {exc}") from exc
