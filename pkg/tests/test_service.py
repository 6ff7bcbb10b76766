from __future__ import annotations

import concurrent.futures
import json

import pytest
from fastapi.testclient import TestClient

from dqaf.episode import write_episode
from dqaf.service import (
    AnalysisService,
    ServiceConfig,
    Store,
    create_app,
    simulate_streaming_schedule,
)
from dqaf.synth import (
    FaultKind,
    FaultSpec,
    GenerationConfig,
    generate_episode,
    make_task_context,
)

SHORT = GenerationConfig(duration_s=10.0)


def seeded_store(root, n_refs=6, extra=()):
    """Store preloaded with clean references, context, and any extra episodes."""
    store = Store(root)
    store.put_context(make_task_context())
    ids = []
    for i in range(n_refs):
        e, mock, _ = generate_episode(9000 + i, SHORT)
        store.put_episode(e)
        store.put_mock(mock)
        ids.append(e.episode_id)
    for e, mock in extra:
        store.put_episode(e)
        store.put_mock(mock)
    return store, ids


@pytest.fixture
def client(tmp_path):
    config = ServiceConfig(store_root=str(tmp_path / "store"), mock_providers=True)
    app = create_app(config)
    with TestClient(app) as c:
        c.service = app.state.service
        yield c


def calibrate(client, ref_ids, percentile=99.0):
    r = client.post(
        "/profiles/calibrate",
        json={"task_id": "synthetic-handover", "reference_ids": ref_ids,
              "percentile": percentile},
    )
    assert r.status_code == 200
    return r.json()


class TestStreamingSimulation:
    def test_calls_finish_between_updates(self):
        # 2.5 s spacing with 2.0 s calls: every call but the last finishes
        times = [2.5 * k for k in range(1, 21)]
        sched = simulate_streaming_schedule(times, 50.0, 2.0)
        assert sched.completed_before_end == 19
        assert sched.residual_estimate_s < 43.0

    def test_slow_calls_queue(self):
        times = [2.5, 5.0, 7.5, 10.0]
        sched = simulate_streaming_schedule(times, 10.0, 6.0)
        assert sched.completed_before_end < 4
        # issue times never precede their update times
        assert all(w >= t for t, w in sched.issued)

    def test_parallel_workers_help(self):
        times = [2.5, 5.0, 7.5, 10.0]
        serial = simulate_streaming_schedule(times, 10.0, 6.0, parallelism=1)
        parallel = simulate_streaming_schedule(times, 10.0, 6.0, parallelism=4)
        assert parallel.completed_before_end >= serial.completed_before_end

    def test_empty_schedule(self):
        sched = simulate_streaming_schedule([], 10.0, 2.0, final_call_s=3.0)
        assert sched.completed_before_end == 0
        assert sched.residual_estimate_s == 3.0


class TestStore:
    def test_episode_round_trip(self, tmp_path):
        store = Store(tmp_path / "s")
        e, _, _ = generate_episode(1, SHORT)
        store.put_episode(e)
        assert store.get_episode(e.episode_id) == e
        assert store.list_episodes() == [e.episode_id]

    def test_missing_profile_raises(self, tmp_path):
        from dqaf.errors import NotCalibrated

        store = Store(tmp_path / "s")
        with pytest.raises(NotCalibrated):
            store.get_profile("nope")

    def test_status_defaults_pending(self, tmp_path):
        store = Store(tmp_path / "s")
        assert store.get_status("anything") == {"status": "pending"}


class TestEndpoints:
    def test_health(self, client):
        assert client.get("/health").json() == {"status": "ok"}

    def test_ingest_and_fetch_episode(self, client, tmp_path):
        e, _, _ = generate_episode(50, SHORT)
        path = tmp_path / "e.dqaf.jsonl"
        write_episode(e, path)
        r = client.post("/episodes", content=path.read_bytes())
        assert r.status_code == 200
        assert r.json()["episode_id"] == e.episode_id
        fetched = client.get(f"/episodes/{e.episode_id}")
        assert fetched.status_code == 200
        assert fetched.text.encode() == path.read_bytes()

    def test_ingest_malformed_is_422(self, client):
        r = client.post("/episodes", content=b"{broken\n")
        assert r.status_code == 422

    def test_unknown_episode_404(self, client):
        assert client.get("/episodes/nope").status_code == 404
        assert client.post("/episodes/nope/analyze", json={}).status_code == 404
        assert client.get("/episodes/nope/status").status_code == 404

    def test_context_round_trip(self, client):
        ctx = make_task_context()
        r = client.post(
            "/contexts",
            json={
                "task_id": ctx.task_id,
                "description": ctx.description,
                "plan": ctx.plan,
                "reference_frames": [list(p) for p in ctx.reference_frames],
                "expert_instructions": ctx.expert_instructions,
            },
        )
        assert r.status_code == 200
        assert r.json()["plan_length"] == len(ctx.plan)

    def test_bad_context_422(self, client):
        r = client.post("/contexts", json={"task_id": "t", "plan": []})
        assert r.status_code == 422


def load_store(client, tmp_path, extra=()):
    root = client.service.store.root
    store, ids = seeded_store(root, extra=extra)
    return store, ids


class TestAnalysisFlow:
    def test_analyze_before_calibrate_is_409(self, client, tmp_path):
        _, ids = load_store(client, tmp_path)
        r = client.post(f"/episodes/{ids[0]}/analyze", json={})
        assert r.status_code == 409

    def test_full_batch_flow(self, client, tmp_path):
        e, mock, _ = generate_episode(60, SHORT)
        _, ids = load_store(client, tmp_path, extra=[(e, mock)])
        calibrate(client, ids)
        r = client.post(f"/episodes/{e.episode_id}/analyze", json={})
        assert r.status_code == 200
        a = client.get(f"/episodes/{e.episode_id}/assessment").json()
        assert a["episode_id"] == e.episode_id
        assert 0.0 <= a["q"] <= 10.0
        assert a["classification"]["label"] == "success"
        assert client.get(f"/episodes/{e.episode_id}/status").json()["status"] == "complete"
        tr = client.get(f"/episodes/{e.episode_id}/trace").json()
        assert len(tr["trace"]) == 4   # 10 s at 2.5 s intervals
        fb = client.get(f"/episodes/{e.episode_id}/feedback").json()
        # a clean episode may earn near-threshold notes but nothing actionable
        assert all(it["severity"] == "note" for it in fb["feedback"])

    def test_faulted_episode_flow(self, client, tmp_path):
        fault = FaultSpec(FaultKind.CHATTER, 2.0, 9.0)
        e, mock, _ = generate_episode(61, SHORT, [fault])
        _, ids = load_store(client, tmp_path, extra=[(e, mock)])
        calibrate(client, ids)
        client.post(f"/episodes/{e.episode_id}/analyze", json={})
        a = client.get(f"/episodes/{e.episode_id}/assessment").json()
        assert a["classification"]["label"] == "failure"
        assert any(r.startswith("persistent:") for r in a["classification"]["reasons"])
        assert a["evidence"]
        fb = client.get(f"/episodes/{e.episode_id}/feedback").json()["feedback"]
        assert fb
        assert all(it["evidence_refs"] for it in fb
                   if it["severity"] in ("critical", "warning"))

    def test_assessment_not_ready_is_202(self, client, tmp_path):
        _, ids = load_store(client, tmp_path)
        r = client.get(f"/episodes/{ids[0]}/assessment")
        assert r.status_code == 202
        assert r.json()["status"] == "pending"

    def test_analysis_is_byte_idempotent(self, client, tmp_path):
        e, mock, _ = generate_episode(62, SHORT)
        store, ids = load_store(client, tmp_path, extra=[(e, mock)])
        calibrate(client, ids)
        client.post(f"/episodes/{e.episode_id}/analyze", json={})
        first = store.assessment_path(e.episode_id).read_bytes()
        client.post(f"/episodes/{e.episode_id}/analyze", json={})
        assert store.assessment_path(e.episode_id).read_bytes() == first

    def test_streaming_matches_batch(self, client, tmp_path):
        e, mock, _ = generate_episode(63, SHORT)
        store, ids = load_store(client, tmp_path, extra=[(e, mock)])
        calibrate(client, ids)
        client.post(f"/episodes/{e.episode_id}/analyze", json={"mode": "batch"})
        batch = store.assessment_path(e.episode_id).read_bytes()
        client.post(f"/episodes/{e.episode_id}/analyze", json={"mode": "streaming"})
        assert store.assessment_path(e.episode_id).read_bytes() == batch
        status = client.get(f"/episodes/{e.episode_id}/status").json()
        assert "streaming" in status
        assert status["streaming"]["completed_before_end"] >= 1

    def test_concurrent_analyze_single_result(self, client, tmp_path):
        e, mock, _ = generate_episode(64, SHORT)
        store, ids = load_store(client, tmp_path, extra=[(e, mock)])
        calibrate(client, ids)
        service: AnalysisService = client.service
        with concurrent.futures.ThreadPoolExecutor(4) as pool:
            results = list(pool.map(
                lambda _: service.analyze(e.episode_id), range(8)
            ))
        assert all(r == results[0] for r in results)
        assert store.get_status(e.episode_id)["status"] == "complete"


class TestCuration:
    def test_ranked_by_quality(self, client, tmp_path):
        clean, clean_mock, _ = generate_episode(70, SHORT)
        fault = FaultSpec(FaultKind.SATURATE, 2.0, 9.0)
        bad, bad_mock, _ = generate_episode(71, SHORT, [fault])
        _, ids = load_store(
            client, tmp_path, extra=[(clean, clean_mock), (bad, bad_mock)]
        )
        calibrate(client, ids)
        for eid in (clean.episode_id, bad.episode_id):
            client.post(f"/episodes/{eid}/analyze", json={})
        rows = client.get("/curation").json()["episodes"]
        assert [r["episode_id"] for r in rows] == [clean.episode_id, bad.episode_id]
        only_success = client.get("/curation", params={"label": "success"}).json()
        assert [r["episode_id"] for r in only_success["episodes"]] == [clean.episode_id]
        high_bar = client.get("/curation", params={"min_quality": 9.99}).json()
        assert all(r["q"] >= 9.99 for r in high_bar["episodes"])

    def test_episode_listing_includes_status(self, client, tmp_path):
        e, mock, _ = generate_episode(72, SHORT)
        _, ids = load_store(client, tmp_path, extra=[(e, mock)])
        calibrate(client, ids)
        client.post(f"/episodes/{e.episode_id}/analyze", json={})
        rows = client.get("/episodes").json()["episodes"]
        by_id = {r["episode_id"]: r for r in rows}
        assert by_id[e.episode_id]["status"] == "complete"
        assert "q" in by_id[e.episode_id]
        assert by_id[ids[0]]["status"] == "pending"
