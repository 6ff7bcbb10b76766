"""End-to-end episode assessment: trace, metrics, violations, evidence,
classification, feedback — and the canonical assessment record."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .episode import Episode, TaskContext
from .evidence import (
    ClassificationPolicy,
    EpisodeClassification,
    EvidenceItem,
    build_evidence,
    classify_episode,
)
from .feedback import FeedbackItem, FeedbackProvider, assemble_input, synthesize
from .metrics import MetricResult, aggregate_quality, evaluate_episode
from .segments import ThresholdProfile, partition_episode, segment_violations
from .semantic import (
    AnomalyRuleConfig,
    SemanticProvider,
    SemanticTrace,
    build_trace,
)


@dataclass
class Assessment:
    episode_id: str
    quality: float
    subscores: dict[str, float]
    raw_values: dict[str, float]
    trace: SemanticTrace
    evidence: list[EvidenceItem]
    classification: EpisodeClassification
    feedback: list[FeedbackItem] = field(default_factory=list)
    policy: ClassificationPolicy = field(default_factory=ClassificationPolicy)

    def to_json(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "q": self.quality,
            "subscores": self.subscores,
            "raw_values": self.raw_values,
            "trace": [
                {
                    "t": u.t,
                    "progress": u.progress,
                    "subtask_index": u.subtask_index,
                    "rationale": u.rationale,
                    "anomaly": u.anomaly,
                }
                for u in self.trace.updates
            ],
            "gaps": self.trace.gaps,
            "evidence": [
                {
                    "metric": it.metric.value,
                    "observed": it.observed,
                    "threshold": it.threshold,
                    "status": it.status.value,
                    "window": list(it.window),
                    "segment_index": it.segment_index,
                    "aligned_update_time": it.aligned_update_time,
                    "aligned_subtask_index": it.aligned_subtask_index,
                    "aligned_subtask": it.aligned_subtask,
                    "rationale_excerpt": it.rationale_excerpt,
                }
                for it in self.evidence
            ],
            "classification": {
                "label": self.classification.label,
                "reasons": self.classification.reasons,
                "persistent_violation_count": self.classification.persistent_violation_count,
                "final_progress": self.classification.final_progress,
                "policy_snapshot": self.policy.to_json(),
            },
            "feedback": [
                {
                    "what": f.what,
                    "where": {
                        "window": list(f.where_window),
                        "subtask": f.where_subtask,
                    },
                    "change": f.change,
                    "severity": f.severity.value,
                    "evidence_refs": f.evidence_refs,
                }
                for f in self.feedback
            ],
        }

    def to_bytes(self) -> bytes:
        return (
            json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
        ).encode("utf-8")


def run_assessment(
    e: Episode,
    ctx: TaskContext,
    semantic_provider: SemanticProvider,
    profile: ThresholdProfile,
    policy: ClassificationPolicy | None = None,
    rules: AnomalyRuleConfig | None = None,
    feedback_provider: FeedbackProvider | None = None,
    trace: SemanticTrace | None = None,
) -> Assessment:
    """Run the full post-episode pipeline. Pure given mock providers.

    A pre-built trace may be passed in (streaming mode builds it while the
    episode is still recording); otherwise the provider is queried here.
    """
    policy = policy or ClassificationPolicy()
    cfg = profile.metric_config
    if trace is None:
        trace = build_trace(
            e, ctx, semantic_provider, interval_s=profile.segment_duration_s, rules=rules
        )
    results: list[MetricResult] = evaluate_episode(e, cfg)
    q = aggregate_quality(results, cfg)
    segments = partition_episode(e, profile.segment_duration_s)
    reports = segment_violations(e, segments, profile)
    evidence = build_evidence(reports, trace, profile.thresholds, ctx.plan)
    classification = classify_episode(q, trace, evidence, policy)
    fb_input = assemble_input(trace, evidence, q, classification, ctx)
    feedback = synthesize(fb_input, feedback_provider)
    return Assessment(
        episode_id=e.episode_id,
        quality=q,
        subscores={r.metric.value: r.subscore for r in results if r.present},
        raw_values={r.metric.value: r.raw_value for r in results if r.present},
        trace=trace,
        evidence=evidence,
        classification=classification,
        feedback=feedback,
        policy=policy,
    )
