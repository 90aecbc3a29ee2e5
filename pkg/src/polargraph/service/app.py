"""HTTP front end. All requests share one FER cache, so repeated or
overlapping simulations across clients reuse earlier frames."""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..engine import BudgetExhausted, FerCache
from . import handlers
from .models import (
    COMMANDS,
    CompareRequest,
    CompareResponse,
    ConstructRequest,
    ConstructResponse,
    DesignSequenceRequest,
    DesignSequenceResponse,
    DesignSingleRequest,
    DesignSingleResponse,
    JobStatus,
    RequiredSnrRequest,
    RequiredSnrResponse,
    SimulateRequest,
    SimulateResponse,
)

REQUEST_MODELS = {
    "construct": ConstructRequest,
    "simulate": SimulateRequest,
    "compare": CompareRequest,
    "design-single": DesignSingleRequest,
    "design-sequence": DesignSequenceRequest,
    "required-snr": RequiredSnrRequest,
}

BUDGET_STATUS = 409


class _Jobs:
    def __init__(self, run):
        self._run = run
        self._pool = ThreadPoolExecutor(max_workers=1)
        self._jobs: dict[str, JobStatus] = {}
        self._lock = threading.Lock()

    def submit(self, command: str, payload: dict) -> JobStatus:
        job = JobStatus(id=uuid.uuid4().hex, command=command, status="queued")
        with self._lock:
            self._jobs[job.id] = job
        self._pool.submit(self._work, job.id, command, payload)
        return job

    def _work(self, job_id: str, command: str, payload: dict) -> None:
        self._update(job_id, status="running")
        try:
            result = self._run(command, payload)
        except Exception as exc:  # reported through the job record
            self._update(job_id, status="failed", error=f"{type(exc).__name__}: {exc}")
        else:
            self._update(job_id, status="done", result=result)

    def _update(self, job_id: str, **changes) -> None:
        with self._lock:
            self._jobs[job_id] = self._jobs[job_id].model_copy(update=changes)

    def get(self, job_id: str) -> JobStatus | None:
        with self._lock:
            return self._jobs.get(job_id)


def create_app(cache_path: str | Path | None = None) -> FastAPI:
    """Build the app; with ``cache_path`` the shared cache is loaded at start and saved after each run."""
    cache = FerCache.load(cache_path) if cache_path else FerCache()
    save_lock = threading.Lock()

    def persist() -> None:
        if cache_path:
            with save_lock:
                cache.save(cache_path)

    def run(command: str, payload: dict) -> dict:
        req = REQUEST_MODELS[command].model_validate(payload)
        handler = handlers.HANDLERS[command]
        try:
            resp = handler(req) if command == "construct" else handler(req, cache=cache)
        finally:
            persist()
        return resp.model_dump(mode="json")

    app = FastAPI(title="polargraph", version=__version__)
    app.state.cache = cache
    jobs = _Jobs(run)

    @app.exception_handler(ValueError)
    async def _invalid(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(BudgetExhausted)
    async def _budget(request: Request, exc: BudgetExhausted):
        return JSONResponse(status_code=BUDGET_STATUS, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__, "cache_entries": len(cache)}

    @app.post("/construct", response_model=ConstructResponse)
    def construct(req: ConstructRequest):
        return handlers.construct(req)

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        return run("simulate", req.model_dump())

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest):
        return run("compare", req.model_dump())

    @app.post("/design-single", response_model=DesignSingleResponse)
    def design_single(req: DesignSingleRequest):
        return run("design-single", req.model_dump())

    @app.post("/design-sequence", response_model=DesignSequenceResponse)
    def design_sequence(req: DesignSequenceRequest):
        return run("design-sequence", req.model_dump())

    @app.post("/required-snr", response_model=RequiredSnrResponse)
    def required_snr(req: RequiredSnrRequest):
        return run("required-snr", req.model_dump())

    @app.post("/jobs/{command}", response_model=JobStatus, status_code=202)
    def submit(command: str, payload: dict):
        if command not in COMMANDS:
            raise HTTPException(404, f"unknown command {command!r}")
        REQUEST_MODELS[command].model_validate(payload)
        return jobs.submit(command, payload)

    @app.get("/jobs/{job_id}", response_model=JobStatus)
    def job(job_id: str):
        status = jobs.get(job_id)
        if status is None:
            raise HTTPException(404, "no such job")
        return status

    return app
