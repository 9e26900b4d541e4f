"""HTTP service over a run directory (JSON API under /api/v1).

Read endpoints serve the persisted stage artifacts directly, so a
response is byte-stable until a stage legitimately reruns. The two
mutating paths follow a single-writer discipline: topic selection
writes go through one lock and land atomically in selection.json, and
search jobs execute one at a time on a background worker, queued in
arrival order. A search job runs the query generation, search, and
analytics stages restricted to the selected topics.

When a built UI bundle is found (env SCITECH_UI_DIR, or frontend/dist
next to the repository checkout), it is mounted at / as static files.
"""

import json
import logging
import os
import queue
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .cluster import load_topics
from .config import PipelineConfig
from .errors import ScitechError
from .keywords import LABELS, load_profiles
from .linker import load_matches
from .pipeline import ANALYTICS_DIR, ARTIFACTS, load_manifest, run_stage

logger = logging.getLogger(__name__)

TABLE_KEYWORDS_PER_LABEL = 10

ANALYTICS_FILES = {
    "by-year": "topics_by_year.json",
    "by-country": "counts_by_country.json",
    "by-field": "counts_by_field.json",
    "by-topic": "counts_by_topic.json",
    "relatedness": "relatedness.json",
    "distance-by-year": "distance_by_year.json",
}


class SelectionPatch(BaseModel):
    selected: bool | None = None
    note: str | None = None


class SearchRunRequest(BaseModel):
    topic_ids: list[int] | None = None
    k: int | None = None
    seed: int | None = None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class SelectionStore:
    """Atomic, lock-guarded persistence for per-topic selection state."""

    def __init__(self, run_dir: Path):
        self.path = run_dir / "selection.json"
        self.lock = threading.Lock()

    def load(self) -> dict[str, dict]:
        if not self.path.exists():
            return {}
        with open(self.path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def get(self, topic_id: int) -> dict:
        entry = self.load().get(str(topic_id))
        if entry is None:
            return {"selected": False, "note": "", "updated_at": None}
        return entry

    def update(self, topic_id: int, patch: SelectionPatch) -> dict:
        with self.lock:
            state = self.load()
            entry = state.get(
                str(topic_id), {"selected": False, "note": "", "updated_at": None}
            )
            if patch.selected is not None:
                entry["selected"] = patch.selected
            if patch.note is not None:
                entry["note"] = patch.note
            entry["updated_at"] = _now()
            state[str(topic_id)] = entry
            tmp = self.path.with_name(self.path.name + ".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(state, fh, indent=2, sort_keys=True)
                fh.write("\n")
            os.replace(tmp, self.path)
            return entry

    def selected_ids(self) -> list[int]:
        return sorted(
            int(tid) for tid, entry in self.load().items() if entry.get("selected")
        )


class JobRunner:
    """One search job at a time; later submissions wait in the queue."""

    def __init__(self, run_dir: Path, config: PipelineConfig):
        self.run_dir = run_dir
        self.config = config
        self.jobs: dict[str, dict] = {}
        self.lock = threading.Lock()
        self.queue: queue.Queue = queue.Queue()
        self.worker = threading.Thread(target=self._drain, daemon=True)
        self.worker.start()

    def submit(self, topic_ids: list[int], k: int | None, seed: int | None) -> str:
        job_id = uuid.uuid4().hex
        with self.lock:
            self.jobs[job_id] = {
                "job_id": job_id,
                "state": "queued",
                "progress": 0.0,
                "counts": {},
                "topic_ids": topic_ids,
                "error": None,
                "submitted_at": _now(),
                "started_at": None,
                "finished_at": None,
            }
        self.queue.put((job_id, topic_ids, k, seed))
        return job_id

    def get(self, job_id: str) -> dict | None:
        with self.lock:
            job = self.jobs.get(job_id)
            return dict(job) if job else None

    def _set(self, job_id: str, **fields) -> None:
        with self.lock:
            self.jobs[job_id].update(fields)

    def _drain(self) -> None:
        while True:
            job_id, topic_ids, k, seed = self.queue.get()
            self._set(job_id, state="running", started_at=_now())

            def on_progress(done, total):
                self._set(job_id, progress=done / total if total else 1.0)

            try:
                run_stage(
                    "queries", self.config, self.run_dir,
                    topic_ids=topic_ids, seed_override=seed,
                )
                report = run_stage(
                    "search", self.config, self.run_dir,
                    topic_ids=topic_ids, progress=on_progress, k_override=k,
                )
                run_stage("analytics", self.config, self.run_dir)
                self._set(
                    job_id,
                    state="completed",
                    progress=1.0,
                    counts=report.details,
                    finished_at=_now(),
                )
            except (ScitechError, ValueError, OSError) as exc:
                logger.exception("search job %s failed", job_id)
                self._set(job_id, state="failed", error=str(exc), finished_at=_now())


def _find_ui_dir() -> Path | None:
    env = os.environ.get("SCITECH_UI_DIR")
    if env:
        path = Path(env)
        return path if path.is_dir() else None
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def create_app(run_dir) -> FastAPI:
    run_dir = Path(run_dir)
    topics_path = run_dir / ARTIFACTS["topics"][0]
    profiles_path = run_dir / ARTIFACTS["keyword profiles"][0]
    for path, stage in ((topics_path, "cluster"), (profiles_path, "keywords")):
        if not path.exists():
            raise ScitechError(
                f"run directory is not servable: {path.name} missing; "
                f"run the {stage} stage first"
            )
    manifest = load_manifest(run_dir) or {}
    config = PipelineConfig.from_dict(manifest.get("config", {}))
    selection = SelectionStore(run_dir)
    runner = JobRunner(run_dir, config)

    app = FastAPI(title="scitech curation API", version="1")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "malformed request", "detail": exc.errors()},
        )

    def topic_map():
        return {t.topic_id: t for t in load_topics(topics_path)}

    def profile_map():
        return {p.topic_id: p for p in load_profiles(profiles_path)}

    def require_topic(topic_id: int):
        topics = topic_map()
        if topic_id not in topics:
            raise HTTPException(status_code=404, detail=f"unknown topic {topic_id}")
        return topics[topic_id]

    def topic_payload(topic, profile, per_label: int | None):
        ranked = {}
        if profile is not None:
            for label in LABELS:
                pairs = profile.ranked[label]
                if per_label is not None:
                    pairs = pairs[:per_label]
                ranked[label] = [
                    {"keyword": kw, "score": score} for kw, score in pairs
                ]
        else:
            ranked = {label: [] for label in LABELS}
        entry = selection.get(topic.topic_id)
        return {
            "topic_id": topic.topic_id,
            "size": topic.size,
            "yearly_counts": {str(y): c for y, c in sorted(topic.yearly_counts.items())},
            "keywords": ranked,
            "selected": entry["selected"],
            "note": entry["note"],
            "updated_at": entry["updated_at"],
        }

    @app.get("/api/v1/topics")
    def list_topics():
        profiles = profile_map()
        return [
            topic_payload(t, profiles.get(tid), TABLE_KEYWORDS_PER_LABEL)
            for tid, t in sorted(topic_map().items())
        ]

    @app.get("/api/v1/topics/{topic_id}")
    def get_topic(topic_id: int):
        topic = require_topic(topic_id)
        return topic_payload(topic, profile_map().get(topic_id), None)

    @app.patch("/api/v1/topics/{topic_id}/selection")
    def patch_selection(topic_id: int, patch: SelectionPatch):
        require_topic(topic_id)
        if patch.selected is None and patch.note is None:
            raise HTTPException(
                status_code=400, detail="selection patch must set selected or note"
            )
        entry = selection.update(topic_id, patch)
        return {"topic_id": topic_id, **entry}

    @app.get("/api/v1/dendrogram")
    def dendrogram():
        path = run_dir / ARTIFACTS["dendrogram"][0]
        if not path.exists():
            raise HTTPException(status_code=404, detail="dendrogram not computed")
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    @app.post("/api/v1/search/run")
    def run_search(body: SearchRunRequest):
        topic_ids = body.topic_ids
        if topic_ids is None:
            topic_ids = selection.selected_ids()
        if not topic_ids:
            raise HTTPException(
                status_code=400,
                detail="no topics selected; select topics or pass topic_ids",
            )
        known = topic_map()
        unknown = [t for t in topic_ids if t not in known]
        if unknown:
            raise HTTPException(status_code=404, detail=f"unknown topic {unknown[0]}")
        if body.k is not None and body.k < 1:
            raise HTTPException(status_code=400, detail="k must be positive")
        job_id = runner.submit(topic_ids, body.k, body.seed)
        return {"job_id": job_id}

    @app.get("/api/v1/jobs/{job_id}")
    def job_status(job_id: str):
        job = runner.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job

    @app.get("/api/v1/topics/{topic_id}/patents")
    def topic_patents(
        topic_id: int,
        max_distance: float | None = None,
        limit: int = 50,
        offset: int = 0,
    ):
        require_topic(topic_id)
        if limit < 0 or offset < 0:
            raise HTTPException(status_code=400, detail="limit and offset must be >= 0")
        matches_path = run_dir / ARTIFACTS["matches"][0]
        rows = []
        if matches_path.exists():
            for m in load_matches(matches_path):
                if m.topic_id != topic_id:
                    continue
                if max_distance is not None and m.distance > max_distance:
                    continue
                rows.append(
                    {
                        "patent_id": m.patent_id,
                        "distance": m.distance,
                        "hit_count": m.hit_count,
                    }
                )
        return {
            "topic_id": topic_id,
            "total": len(rows),
            "items": rows[offset : offset + limit],
        }

    @app.get("/api/v1/analytics/{table}")
    def analytics_table(table: str):
        filename = ANALYTICS_FILES.get(table)
        if filename is None:
            raise HTTPException(
                status_code=404,
                detail=f"unknown analytics table {table!r}; "
                f"expected one of {sorted(ANALYTICS_FILES)}",
            )
        path = run_dir / ANALYTICS_DIR / filename
        if not path.exists():
            raise HTTPException(
                status_code=404,
                detail=f"analytics table {table} not computed; run the analytics stage",
            )
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    ui_dir = _find_ui_dir()
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(run_dir, port: int, host: str = "127.0.0.1") -> None:
    import uvicorn

    app = create_app(run_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
