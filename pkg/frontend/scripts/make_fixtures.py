"""Regenerate the dashboard test fixtures from the analysis service.

Creates a throwaway store, analyzes one clean and one faulted synthetic
episode with a hand-authored threshold profile, and dumps the exact GET
responses the dashboard consumes into frontend/fixtures/.

Run from the repository root:  python3 frontend/scripts/make_fixtures.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from dqaf import (
    FaultKind,
    GenerationConfig,
    MetricConfig,
    MetricId,
    ThresholdProfile,
    default_fault,
    generate_episode,
    make_task_context,
)
from dqaf.service import ServiceConfig, create_app

OUT = Path(__file__).resolve().parent.parent / "fixtures"

# A fixed profile with comfortable margins: the clean fixture must produce
# zero violation windows, the saturation fault must produce clean exceed
# windows and nothing else.
PROFILE = ThresholdProfile(
    task_id="synthetic-handover",
    thresholds={
        MetricId.SATURATION: 0.01,
        MetricId.LDLJ: 8.0,
        MetricId.CHATTER: 3.0,
        MetricId.STATIC: 0.9,
    },
    metric_config=MetricConfig(
        subscore_anchors={
            MetricId.SATURATION: (0.0, 0.05),
            MetricId.LDLJ: (2.0, 8.0),
            MetricId.CHATTER: (0.5, 5.0),
            MetricId.STATIC: (0.2, 0.8),
        }
    ),
)


def main() -> None:
    root = tempfile.mkdtemp(prefix="dqaf-fixtures-")
    app = create_app(ServiceConfig(store_root=root, mock_providers=True))
    client = TestClient(app)
    store = app.state.service.store

    store.put_context(make_task_context())
    store.put_profile(PROFILE)

    cfg = GenerationConfig()
    clean, clean_mock, _ = generate_episode(seed=11)
    fault = default_fault(FaultKind.SATURATE, cfg)
    faulted, faulted_mock, _ = generate_episode(seed=12, faults=[fault])
    for episode, mock in ((clean, clean_mock), (faulted, faulted_mock)):
        store.put_episode(episode)
        store.put_mock(mock)
        client.post(f"/episodes/{episode.episode_id}/analyze", json={"mode": "batch"})

    OUT.mkdir(exist_ok=True)

    def dump(name: str, data) -> None:
        (OUT / name).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        print(f"wrote fixtures/{name}")

    dump("assessment-success.json",
         client.get(f"/episodes/{clean.episode_id}/assessment").json())
    dump("assessment-failure.json",
         client.get(f"/episodes/{faulted.episode_id}/assessment").json())
    dump("episodes.json", client.get("/episodes").json())
    dump("curation.json", client.get("/curation").json())

    success = client.get(f"/episodes/{clean.episode_id}/assessment").json()
    assert success["evidence"] == [], "clean fixture must carry no evidence"
    failure = client.get(f"/episodes/{faulted.episode_id}/assessment").json()
    assert failure["evidence"], "failure fixture must carry evidence"
    assert failure["classification"]["label"] == "failure"


if __name__ == "__main__":
    main()
