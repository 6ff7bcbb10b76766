"""
Driving the analysis pipeline over HTTP
=======================================

Exercises the HTTP API end to end against an in-process application:
ingest episodes, calibrate, analyze, then read back the assessment,
trace, feedback, and curation ranking — exactly the endpoints a
dashboard consumes. Run `dqaf serve --mock-providers` for a real server.
"""

import tempfile

from fastapi.testclient import TestClient

from dqaf import (
    FaultKind,
    GenerationConfig,
    default_fault,
    generate_episode,
    make_task_context,
)
from dqaf.service import ServiceConfig, Store, create_app

root = tempfile.mkdtemp(prefix="dqaf-demo-")
app = create_app(ServiceConfig(store_root=root, mock_providers=True))
client = TestClient(app)
store: Store = app.state.service.store

# Seed the store: a task context, clean references, and two episodes to
# analyze (one clean, one with a saturation fault).
store.put_context(make_task_context())
reference_ids = []
for i in range(8):
    episode, mock, _ = generate_episode(seed=100 + i)
    store.put_episode(episode)
    store.put_mock(mock)
    reference_ids.append(episode.episode_id)

cfg = GenerationConfig()
clean, clean_mock, _ = generate_episode(seed=200)
faulted, faulted_mock, _ = generate_episode(
    seed=201, faults=[default_fault(FaultKind.SATURATE, cfg)]
)
for episode, mock in ((clean, clean_mock), (faulted, faulted_mock)):
    store.put_episode(episode)
    store.put_mock(mock)

# Calibrate thresholds over the references, then analyze both episodes.
resp = client.post(
    "/profiles/calibrate",
    json={"task_id": "synthetic-handover", "reference_ids": reference_ids,
          "percentile": 99.0},
)
print("calibrated:", resp.json()["thresholds"])

for episode_id in (clean.episode_id, faulted.episode_id):
    client.post(f"/episodes/{episode_id}/analyze", json={"mode": "batch"})
    assessment = client.get(f"/episodes/{episode_id}/assessment").json()
    cls = assessment["classification"]
    print(f"\n{episode_id}: q={assessment['q']:.2f} label={cls['label']} "
          f"reasons={cls['reasons']}")
    for fb in client.get(f"/episodes/{episode_id}/feedback").json()["feedback"]:
        print(f"  [{fb['severity']}] {fb['what']}")

# The curation endpoint ranks assessed episodes by quality for
# downstream dataset filtering.
print("\ncuration ranking:")
for row in client.get("/curation").json()["episodes"]:
    print(f"  {row['episode_id']}  q={row['q']:.2f}  {row['label']}")
