"""HTTP service, file-backed store, and the streaming analysis scheduler.

Persistence is content-addressed flat files under a store root
(episodes/, contexts/, profiles/, assessments/, mocks/) — trivially
auditable and backup-friendly. Streaming mode replays the semantic
schedule on a virtual clock so overlap measurements are deterministic.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .episode import (
    Episode,
    TaskContext,
    load_episode,
    load_task_context,
    write_episode,
    write_task_context,
)
from .errors import DqafError, NotCalibrated, ProviderError
from .evidence import ClassificationPolicy
from .feedback import FeedbackProvider
from .metrics import MetricConfig
from .pipeline import Assessment, run_assessment
from .segments import ThresholdProfile, calibrate_thresholds
from .semantic import (
    AnomalyRuleConfig,
    HttpSemanticProvider,
    ScriptedMockProvider,
    SemanticProvider,
    build_trace,
    build_update_schedule,
)


@dataclass
class StreamingSchedule:
    """Wall-clock record of semantic queries issued while recording."""

    issued: list[tuple[float, float]]      # (update_time, issue_wall_time)
    completed_before_end: int
    residual_estimate_s: float

    def to_json(self) -> dict:
        return {
            "issued": [[t, w] for t, w in self.issued],
            "completed_before_end": self.completed_before_end,
            "residual_estimate_s": self.residual_estimate_s,
        }


def simulate_streaming_schedule(
    update_times: list[float],
    duration_s: float,
    per_call_s: float,
    final_call_s: float = 3.0,
    parallelism: int = 1,
) -> StreamingSchedule:
    """Virtual-clock simulation of issuing semantic calls during recording.

    A call for update time t can be issued once t has elapsed and a worker
    is free; it completes per_call_s later. Deterministic, no real sleeping.
    """
    workers = [0.0] * max(1, parallelism)
    issued: list[tuple[float, float]] = []
    completed_before_end = 0
    for t in update_times:
        w = min(range(len(workers)), key=lambda i: workers[i])
        start = max(t, workers[w])
        done = start + per_call_s
        workers[w] = done
        issued.append((t, start))
        if done <= duration_s + 1e-9:
            completed_before_end += 1
    n = len(update_times)
    overlap = completed_before_end / n if n else 0.0
    residual = (1.0 - overlap) * n * per_call_s + final_call_s
    return StreamingSchedule(issued, completed_before_end, residual)


class Store:
    """Flat-file store with per-episode write locks and canonical JSON."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("episodes", "contexts", "profiles", "assessments", "mocks"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, episode_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(episode_id, threading.Lock())

    # episodes
    def episode_path(self, episode_id: str) -> Path:
        return self.root / "episodes" / f"{episode_id}.dqaf.jsonl"

    def put_episode(self, e: Episode) -> None:
        write_episode(e, self.episode_path(e.episode_id))

    def get_episode(self, episode_id: str) -> Episode:
        return load_episode(self.episode_path(episode_id))

    def has_episode(self, episode_id: str) -> bool:
        return self.episode_path(episode_id).exists()

    def list_episodes(self) -> list[str]:
        return sorted(
            p.name.removesuffix(".dqaf.jsonl")
            for p in (self.root / "episodes").glob("*.dqaf.jsonl")
        )

    # task contexts
    def context_path(self, task_id: str) -> Path:
        return self.root / "contexts" / f"{task_id}.task.json"

    def put_context(self, ctx: TaskContext) -> None:
        write_task_context(ctx, self.context_path(ctx.task_id))

    def get_context(self, task_id: str) -> TaskContext:
        return load_task_context(self.context_path(task_id))

    # profiles
    def profile_path(self, task_id: str) -> Path:
        return self.root / "profiles" / f"{task_id}.profile.json"

    def put_profile(self, profile: ThresholdProfile) -> None:
        profile.save(self.profile_path(profile.task_id))

    def get_profile(self, task_id: str) -> ThresholdProfile:
        path = self.profile_path(task_id)
        if not path.exists():
            raise NotCalibrated(task_id)
        return ThresholdProfile.load(path)

    # scripted semantic mocks
    def mock_path(self, episode_id: str) -> Path:
        return self.root / "mocks" / f"{episode_id}.semmock.json"

    def put_mock(self, mock: ScriptedMockProvider) -> None:
        mock.save(self.mock_path(mock.episode_id))

    def get_mock(self, episode_id: str) -> ScriptedMockProvider:
        return ScriptedMockProvider.load(self.mock_path(episode_id))

    # assessments
    def assessment_path(self, episode_id: str) -> Path:
        return self.root / "assessments" / f"{episode_id}.assessment.json"

    def status_path(self, episode_id: str) -> Path:
        return self.root / "assessments" / f"{episode_id}.status.json"

    def put_assessment(self, assessment: Assessment, status: dict) -> None:
        self.assessment_path(assessment.episode_id).write_bytes(assessment.to_bytes())
        self.set_status(assessment.episode_id, status)

    def get_assessment(self, episode_id: str) -> dict:
        return json.loads(self.assessment_path(episode_id).read_text(encoding="utf-8"))

    def has_assessment(self, episode_id: str) -> bool:
        return self.assessment_path(episode_id).exists()

    def set_status(self, episode_id: str, status: dict) -> None:
        self.status_path(episode_id).write_text(
            json.dumps(status, sort_keys=True), encoding="utf-8"
        )

    def get_status(self, episode_id: str) -> dict:
        path = self.status_path(episode_id)
        if not path.exists():
            return {"status": "pending"}
        return json.loads(path.read_text(encoding="utf-8"))


@dataclass
class ServiceConfig:
    store_root: str
    mock_providers: bool = False
    semantic_url: str | None = None
    feedback_url: str | None = None
    api_key: str | None = None
    streaming_call_latency_s: float = 2.0
    policy: ClassificationPolicy = field(default_factory=ClassificationPolicy)
    rules: AnomalyRuleConfig = field(default_factory=AnomalyRuleConfig)


class AnalysisService:
    """Analysis orchestration over a Store: calibrate, analyze, curate."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = Store(config.store_root)

    def _semantic_provider(self, episode_id: str) -> SemanticProvider:
        if self.config.mock_providers or not self.config.semantic_url:
            return self.store.get_mock(episode_id)
        return HttpSemanticProvider(self.config.semantic_url, self.config.api_key)

    def _feedback_provider(self) -> FeedbackProvider | None:
        if self.config.mock_providers or not self.config.feedback_url:
            return None   # deterministic fallback synthesizer
        from .feedback import HttpFeedbackProvider

        return HttpFeedbackProvider(self.config.feedback_url, self.config.api_key)

    def calibrate(
        self, task_id: str, reference_ids: list[str], percentile: float = 95.0
    ) -> ThresholdProfile:
        refs = [self.store.get_episode(i) for i in reference_ids]
        profile = calibrate_thresholds(refs, MetricConfig(), percentile=percentile)
        profile.task_id = task_id
        self.store.put_profile(profile)
        return profile

    def analyze(self, episode_id: str, mode: str = "batch") -> dict:
        """Run the pipeline and persist the assessment; returns the payload.

        Streaming mode builds the trace against a simulated recording clock
        and attaches the StreamingSchedule; assessments are otherwise
        identical between modes given identical provider responses.
        """
        with self.store.lock(episode_id):
            e = self.store.get_episode(episode_id)
            ctx = self.store.get_context(e.task_id)
            profile = self.store.get_profile(e.task_id)
            self.store.set_status(episode_id, {"status": "semantic_running"})
            provider = self._semantic_provider(episode_id)
            try:
                schedule_record = None
                trace = None
                if mode == "streaming":
                    schedule = build_update_schedule(e, profile.segment_duration_s)
                    schedule_record = simulate_streaming_schedule(
                        schedule,
                        e.duration_s,
                        self.config.streaming_call_latency_s,
                    )
                    trace = build_trace(
                        e, ctx, provider, profile.segment_duration_s, self.config.rules
                    )
                assessment = run_assessment(
                    e,
                    ctx,
                    provider,
                    profile,
                    policy=self.config.policy,
                    rules=self.config.rules,
                    feedback_provider=self._feedback_provider(),
                    trace=trace,
                )
            except (ProviderError, DqafError) as exc:
                self.store.set_status(
                    episode_id, {"status": "error", "error": str(exc)}
                )
                raise
            status = {"status": "complete"}
            if schedule_record is not None:
                status["streaming"] = schedule_record.to_json()
            self.store.put_assessment(assessment, status)
            return self.store.get_assessment(episode_id)

    def curate(
        self,
        task_id: str | None = None,
        min_quality: float = 0.0,
        label_filter: str | None = None,
    ) -> list[dict]:
        """Ranked manifest: q descending, deterministic episode_id tie-break."""
        rows = []
        for episode_id in self.store.list_episodes():
            if not self.store.has_assessment(episode_id):
                continue
            a = self.store.get_assessment(episode_id)
            if task_id is not None:
                e = self.store.get_episode(episode_id)
                if e.task_id != task_id:
                    continue
            label = a["classification"]["label"]
            if label_filter is not None and label != label_filter:
                continue
            if a["q"] < min_quality:
                continue
            rows.append({"episode_id": episode_id, "q": a["q"], "label": label})
        rows.sort(key=lambda r: (-r["q"], r["episode_id"]))
        return rows


def create_app(config: ServiceConfig):
    """FastAPI application exposing the assessment API the dashboard consumes."""
    service = AnalysisService(config)
    app = FastAPI(title="dqaf")
    app.state.service = service

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/episodes")
    async def post_episode(request: Request):
        body = await request.body()
        tmp = service.store.root / "incoming.dqaf.jsonl"
        tmp.write_bytes(body)
        try:
            e = load_episode(tmp)
        except DqafError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        finally:
            tmp.unlink(missing_ok=True)
        service.store.put_episode(e)
        return {"episode_id": e.episode_id, "task_id": e.task_id, "samples": e.n_samples}

    @app.get("/episodes/{episode_id}")
    def get_episode(episode_id: str):
        if not service.store.has_episode(episode_id):
            raise HTTPException(status_code=404, detail=f"unknown episode {episode_id}")
        return PlainTextResponse(
            service.store.episode_path(episode_id).read_text(encoding="utf-8")
        )

    @app.post("/contexts")
    def post_context(payload: dict):
        from .episode import TaskContext

        try:
            ctx = TaskContext(
                task_id=str(payload["task_id"]),
                description=str(payload.get("description", "")),
                plan=[str(p) for p in payload["plan"]],
                reference_frames=[(str(u), str(c)) for u, c in payload["reference_frames"]],
                expert_instructions=str(payload.get("expert_instructions", "")),
            ).validate()
        except (KeyError, TypeError, ValueError, DqafError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        service.store.put_context(ctx)
        return {"task_id": ctx.task_id, "plan_length": len(ctx.plan)}

    @app.post("/episodes/{episode_id}/semmock")
    def post_semmock(episode_id: str, payload: dict):
        payload = {"episode_id": episode_id, **payload}
        mock = ScriptedMockProvider.from_json(payload)
        service.store.put_mock(mock)
        return {"episode_id": episode_id, "updates": len(mock.updates)}

    @app.post("/profiles/calibrate")
    def calibrate(payload: dict):
        try:
            profile = service.calibrate(
                str(payload["task_id"]),
                [str(i) for i in payload["reference_ids"]],
                float(payload.get("percentile", 95.0)),
            )
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except DqafError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "task_id": profile.task_id,
            "thresholds": {m.value: v for m, v in profile.thresholds.items()},
            "warnings": profile.warnings,
        }

    @app.post("/episodes/{episode_id}/analyze")
    def analyze(episode_id: str, payload: dict | None = None):
        mode = (payload or {}).get("mode", "batch")
        if not service.store.has_episode(episode_id):
            raise HTTPException(status_code=404, detail=f"unknown episode {episode_id}")
        try:
            assessment = service.analyze(episode_id, mode=mode)
        except NotCalibrated as exc:
            raise HTTPException(status_code=409, detail=f"not calibrated: {exc}")
        except DqafError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return {"episode_id": episode_id, "status": "complete", "q": assessment["q"]}

    @app.get("/episodes/{episode_id}/assessment")
    def get_assessment(episode_id: str):
        if not service.store.has_assessment(episode_id):
            status = service.store.get_status(episode_id)
            if status.get("status") in ("pending", "semantic_running", "error"):
                return JSONResponse(status_code=202, content=status)
            raise HTTPException(status_code=404, detail=f"no assessment for {episode_id}")
        return service.store.get_assessment(episode_id)

    @app.get("/episodes/{episode_id}/trace")
    def get_trace(episode_id: str):
        if not service.store.has_assessment(episode_id):
            raise HTTPException(status_code=404, detail=f"no assessment for {episode_id}")
        a = service.store.get_assessment(episode_id)
        return {"episode_id": episode_id, "trace": a["trace"], "gaps": a["gaps"]}

    @app.get("/episodes/{episode_id}/feedback")
    def get_feedback(episode_id: str):
        if not service.store.has_assessment(episode_id):
            raise HTTPException(status_code=404, detail=f"no assessment for {episode_id}")
        a = service.store.get_assessment(episode_id)
        return {"episode_id": episode_id, "feedback": a["feedback"]}

    @app.get("/episodes/{episode_id}/status")
    def get_status(episode_id: str):
        if service.store.has_assessment(episode_id):
            return service.store.get_status(episode_id)
        if not service.store.has_episode(episode_id):
            raise HTTPException(status_code=404, detail=f"unknown episode {episode_id}")
        return service.store.get_status(episode_id)

    @app.get("/curation")
    def curation(
        task_id: str | None = None,
        min_quality: float = 0.0,
        label: str | None = None,
    ):
        return {"episodes": service.curate(task_id, min_quality, label)}

    @app.get("/episodes")
    def list_episodes():
        rows = []
        for episode_id in service.store.list_episodes():
            row = {"episode_id": episode_id, **service.store.get_status(episode_id)}
            if service.store.has_assessment(episode_id):
                a = service.store.get_assessment(episode_id)
                row["q"] = a["q"]
                row["label"] = a["classification"]["label"]
                row["reasons"] = a["classification"]["reasons"]
            rows.append(row)
        rows.reverse()   # newest ids last in sorted order; show newest first
        return {"episodes": rows}

    return app


def serve(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8000):
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port)
