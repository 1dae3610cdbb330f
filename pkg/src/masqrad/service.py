"""HTTP surface over the orchestrator.

The service holds no authoritative state: every response is reconstructed
from the run store, so a restarted service serves the same answers.
"""

from __future__ import annotations

import asyncio
import json
import uuid
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .actor import DatasetRef
from .backends import MockBackend
from .config import EngineConfig
from .orchestrator import PipelineRun, RunNotFound, RunStore, run_pipeline

MEDIA_TYPES = {
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".csv": "text/csv",
    ".json": "application/json",
}

EVENT_POLL_INTERVAL = 0.1


def _status_payload(run: PipelineRun, store: RunStore) -> dict:
    return {
        "run_id": run.run_id,
        "query": run.query,
        "stage": run.stage,
        "timings": run.timings,
        "failure_reason": run.failure_reason,
        "warnings": run.warnings,
        "transitions": store.transitions(run.run_id),
    }


def create_app(config: EngineConfig) -> FastAPI:
    app = FastAPI(title="masqrad")
    store = RunStore(config.run_store_root)
    head = config.load_head()
    encoder = config.make_encoder()
    backend = config.make_backend()
    pool = ThreadPoolExecutor(max_workers=config.workers)
    app.state.store = store
    app.state.pool = pool

    def per_run_backend():
        return backend.session() if isinstance(backend, MockBackend) else backend

    def load_or_404(run_id: str) -> PipelineRun:
        try:
            return store.load(run_id)
        except RunNotFound:
            raise HTTPException(404, f"unknown run {run_id}")

    @app.post("/v1/runs", status_code=202)
    def submit_run(body: dict):
        if not isinstance(body, dict) or "query" not in body or "dataset_ref" not in body:
            raise HTTPException(400, "body must contain query and dataset_ref")
        try:
            dataset = DatasetRef.from_dict(body["dataset_ref"])
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(400, f"malformed dataset_ref: {exc}")
        run_id = uuid.uuid4().hex[:12]
        query = body["query"]
        query_id = body.get("query_id") or run_id
        # Persist a placeholder before returning so polling never races.
        store.save(PipelineRun(run_id=run_id, query=query, query_id=query_id, dataset=dataset))
        pool.submit(
            run_pipeline,
            query,
            dataset,
            backend=per_run_backend(),
            encoder=encoder,
            head=head,
            store=store,
            policy=config.policy,
            limits=config.limits,
            runner=config.runner,
            run_id=run_id,
            query_id=query_id,
        )
        return {"run_id": run_id}

    @app.get("/v1/runs/{run_id}")
    def run_status(run_id: str):
        return _status_payload(load_or_404(run_id), store)

    @app.get("/v1/runs/{run_id}/transcript")
    def run_transcript(run_id: str):
        load_or_404(run_id)
        transcript_path = store.run_dir(run_id) / "transcript.json"
        if not transcript_path.is_file():
            raise HTTPException(404, "no transcript recorded for this run")
        return JSONResponse(json.loads(transcript_path.read_text()))

    @app.get("/v1/runs/{run_id}/report")
    def run_report(run_id: str):
        load_or_404(run_id)
        report_path = store.run_dir(run_id) / "report.json"
        if not report_path.is_file():
            raise HTTPException(404, "no report recorded for this run")
        return JSONResponse(json.loads(report_path.read_text()))

    @app.get("/v1/runs/{run_id}/artifacts")
    def list_artifacts(run_id: str):
        run = load_or_404(run_id)
        if run.execution is None:
            return {"artifacts": []}
        return {
            "artifacts": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "byte_size": a.byte_size,
                    "digest": a.digest,
                    "file": a.file,
                }
                for a in run.execution.artifacts
            ]
        }

    @app.get("/v1/runs/{run_id}/artifacts/{name}")
    def artifact_bytes(run_id: str, name: str):
        run = load_or_404(run_id)
        artifact = next(
            (a for a in (run.execution.artifacts if run.execution else ()) if a.name == name),
            None,
        )
        if artifact is None:
            raise HTTPException(404, f"unknown artifact {name}")
        path = store.execution_dir(run_id) / artifact.file
        if not path.is_file():
            raise HTTPException(404, f"artifact file missing: {artifact.file}")
        suffix = path.suffix.lower()
        return Response(
            content=path.read_bytes(),
            media_type=MEDIA_TYPES.get(suffix, "application/octet-stream"),
        )

    @app.get("/v1/runs/{run_id}/events")
    async def run_events(run_id: str):
        load_or_404(run_id)

        async def stream():
            sent = 0
            while True:
                entries = store.transitions(run_id)
                for entry in entries[sent:]:
                    yield f"event: transition\ndata: {json.dumps(entry)}\n\n"
                    sent += 1
                if entries and entries[-1]["to"] in ("done", "failed"):
                    return
                await asyncio.sleep(EVENT_POLL_INTERVAL)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/v1/health")
    def health():
        if not store.root.is_dir():
            raise HTTPException(503, "run store unreachable")
        return {"status": "ok", "backend": config.backend.kind}

    return app
