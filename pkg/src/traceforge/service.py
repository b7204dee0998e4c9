"""HTTP service consumed by the web console. Thin JSON layer over the
controller; no trace logic lives here."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import AppConfig, config_to_dict, validate_config
from .controller import JobRegistry, JobState, TraceController, TraceRequest
from .errors import ExportIoError, InvalidParameterError, NoConnectivityError, TraceError
from .exportxml import ExportRequest, export_results, result_to_json
from .model import TraceKind, make_target
from .transport import ConnectivityStatus, ProxyConfig


class ProxyBody(BaseModel):
    host: str = ""
    port: int = 0


class ConfigBody(BaseModel):
    checkConnectionURL: str
    googleSafeBrowsingKey: str = ""
    proxy: ProxyBody = Field(default_factory=ProxyBody)


class QueryBody(BaseModel):
    target: str
    httpPort: int | None = None
    httpsPort: int | None = None
    traces: list[str]
    params: dict[str, dict] = Field(default_factory=dict)


class ExportBody(BaseModel):
    path: str


def _job_view(job) -> dict:
    return {
        "jobId": job.id,
        "target": job.target.host,
        "state": job.state.value,
        "kinds": [kind.value for kind in job.kinds],
        "progress": job.progress,
        "error": job.error,
    }


def create_app(controller: TraceController, static_dir: str | Path | None = None,
               synchronous_jobs: bool = False) -> FastAPI:
    """`synchronous_jobs` makes POST /api/query block until the job is done
    (deterministic tests); the UI path runs jobs on worker threads."""
    app = FastAPI(title="traceforge", docs_url=None, redoc_url=None)
    registry = JobRegistry(controller)
    app.state.controller = controller
    app.state.jobs = registry

    @app.exception_handler(TraceError)
    async def trace_error_handler(_request, err: TraceError):
        from fastapi.responses import JSONResponse

        status = 400
        if isinstance(err, NoConnectivityError):
            status = 503
        return JSONResponse(status_code=status,
                            content={"error": type(err).__name__, "detail": str(err)})

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/config")
    def get_config():
        return config_to_dict(controller.config)

    @app.put("/api/config")
    def put_config(body: ConfigBody):
        config = AppConfig(
            check_connection_url=body.checkConnectionURL,
            google_safe_browsing_key=body.googleSafeBrowsingKey,
            proxy=ProxyConfig(host=body.proxy.host, port=body.proxy.port),
        )
        validate_config(config)
        controller.configure_connection(config)
        return config_to_dict(controller.config)

    @app.get("/api/connectivity")
    def connectivity():
        status = controller.check_connection()
        return {"status": status.value, "connected": status is ConnectivityStatus.CONNECTED}

    @app.post("/api/query", status_code=202)
    def post_query(body: QueryBody):
        target = make_target(body.target, body.httpPort, body.httpsPort)
        requests = [
            TraceRequest(kind=TraceKind.from_name(name), params=body.params.get(name, {}))
            for name in body.traces
        ]
        job = registry.submit(target, requests, synchronous=synchronous_jobs)
        return {"jobId": job.id}

    def _job_or_404(job_id: str):
        job = registry.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job

    @app.get("/api/query/{job_id}")
    def get_job(job_id: str):
        return _job_view(_job_or_404(job_id))

    @app.get("/api/query/{job_id}/result")
    def get_result(job_id: str):
        job = _job_or_404(job_id)
        return {
            "jobId": job.id,
            "state": job.state.value,
            "results": [result_to_json(result) for result in job.results],
        }

    @app.post("/api/query/{job_id}/export")
    def post_export(job_id: str, body: ExportBody):
        job = _job_or_404(job_id)
        if job.state is not JobState.DONE:
            raise HTTPException(status_code=409,
                                detail=f"job is {job.state.value}; export needs Done")
        try:
            written = export_results(ExportRequest(results=job.results, path=body.path),
                                     generated_at=controller.clock.now())
        except (InvalidParameterError, ExportIoError) as err:
            raise HTTPException(status_code=400, detail=str(err)) from err
        return {"path": str(written)}

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
