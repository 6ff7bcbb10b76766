"""Cross-modal evidence construction and episode classification.

Each segment-level violation is aligned with the nearest semantic update
(ties broken toward the earlier update) and summarized as an evidence
item. Classification maps (quality, trace, evidence) to a Success/Failure
label with auditable reason codes; isolated transients never flip a label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyTrace
from .metrics import MetricId
from .segments import Segment, SegmentReport
from .semantic import SemanticTrace


class ViolationStatus(str, Enum):
    EXCEED = "exceed"
    NEAR = "near"


@dataclass
class EvidenceItem:
    metric: MetricId
    observed: float
    threshold: float
    status: ViolationStatus
    window: tuple[float, float]
    segment_index: int
    aligned_update_time: float | None
    aligned_subtask_index: int | None
    aligned_subtask: str | None
    rationale_excerpt: str = ""


@dataclass
class ClassificationPolicy:
    completion_tolerance: float = 95.0   # final progress below this fails
    quality_floor: float = 5.0
    persistence_run: int = 2             # consecutive exceed segments, same metric
    persistence_total: int = 4           # exceed segments overall, same metric
    anomaly_min: int = 2

    def to_json(self) -> dict:
        return {
            "completion_tolerance": self.completion_tolerance,
            "quality_floor": self.quality_floor,
            "persistence_run": self.persistence_run,
            "persistence_total": self.persistence_total,
            "anomaly_min": self.anomaly_min,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ClassificationPolicy":
        return cls(**data)


@dataclass
class EpisodeClassification:
    episode_id: str
    quality: float
    label: str                     # "success" | "failure"
    reasons: list[str] = field(default_factory=list)
    persistent_violation_count: int = 0
    final_progress: float = 0.0


def align_segment(seg: Segment, trace: SemanticTrace) -> float:
    """The update time nearest the segment midpoint; earlier update wins ties."""
    if not trace.updates:
        raise EmptyTrace(trace.episode_id)
    mid = seg.midpoint
    best = trace.updates[0].t
    best_d = abs(best - mid)
    for u in trace.updates[1:]:
        d = abs(u.t - mid)
        if d < best_d - 1e-12:
            best, best_d = u.t, d
    return best


RATIONALE_EXCERPT_LEN = 160


def build_evidence(
    reports: list[SegmentReport],
    trace: SemanticTrace,
    thresholds: dict[MetricId, float] | None = None,
    plan: list[str] | None = None,
) -> list[EvidenceItem]:
    """One evidence item per (segment, metric) violation, ordered by window then metric.

    With an empty trace the items are still emitted, with alignment marked
    unavailable, so telemetry findings survive total provider failure.
    """
    items: list[EvidenceItem] = []
    metric_order = {m: i for i, m in enumerate(MetricId)}
    for rep in reports:
        flagged = [
            (m, ViolationStatus.EXCEED) for m in rep.values if rep.exceed.get(m)
        ] + [(m, ViolationStatus.NEAR) for m in rep.values if rep.near.get(m)]
        if not flagged:
            continue
        aligned = None
        if trace.updates:
            aligned_t = align_segment(rep.segment, trace)
            aligned = next(u for u in trace.updates if u.t == aligned_t)
        for m, status in sorted(flagged, key=lambda fm: metric_order[fm[0]]):
            subtask_name = None
            if aligned is not None and plan:
                subtask_name = plan[aligned.subtask_index - 1]
            items.append(
                EvidenceItem(
                    metric=m,
                    observed=rep.values[m],
                    threshold=(thresholds or {}).get(m, float("nan")),
                    status=status,
                    window=(rep.segment.t_start, rep.segment.t_end),
                    segment_index=rep.segment.index,
                    aligned_update_time=aligned.t if aligned else None,
                    aligned_subtask_index=aligned.subtask_index if aligned else None,
                    aligned_subtask=subtask_name,
                    rationale_excerpt=(
                        aligned.rationale[:RATIONALE_EXCERPT_LEN] if aligned else ""
                    ),
                )
            )
    items.sort(key=lambda it: (it.window[0], metric_order[it.metric], it.status.value))
    return items


def _persistent_metrics(
    evidence: list[EvidenceItem], policy: ClassificationPolicy
) -> dict[MetricId, int]:
    """Metrics whose exceed violations satisfy a persistence clause, with counts."""
    by_metric: dict[MetricId, list[int]] = {}
    for it in evidence:
        if it.status is ViolationStatus.EXCEED:
            by_metric.setdefault(it.metric, []).append(it.segment_index)
    persistent: dict[MetricId, int] = {}
    for m, seg_indices in by_metric.items():
        seg_indices = sorted(set(seg_indices))
        longest_run = 1
        run = 1
        for a, b in zip(seg_indices, seg_indices[1:]):
            run = run + 1 if b == a + 1 else 1
            longest_run = max(longest_run, run)
        if longest_run >= policy.persistence_run or len(seg_indices) >= policy.persistence_total:
            persistent[m] = len(seg_indices)
    return persistent


def classify_episode(
    q: float,
    trace: SemanticTrace,
    evidence: list[EvidenceItem],
    policy: ClassificationPolicy | None = None,
) -> EpisodeClassification:
    """Failure iff the episode is incomplete, low quality, persistently
    violating one metric, or repeatedly anomalous; all triggered reasons
    are recorded so the label is reproducible from the record alone."""
    policy = policy or ClassificationPolicy()
    reasons: list[str] = []
    final_progress = trace.final_progress
    if final_progress < policy.completion_tolerance:
        reasons.append("incomplete")
    if q < policy.quality_floor:
        reasons.append("low-quality")
    persistent = _persistent_metrics(evidence, policy)
    for m in MetricId:
        if m in persistent:
            reasons.append(f"persistent:{m.value}")
    if trace.anomaly_count >= policy.anomaly_min:
        reasons.append("anomalies")
    return EpisodeClassification(
        episode_id=trace.episode_id,
        quality=q,
        label="failure" if reasons else "success",
        reasons=reasons,
        persistent_violation_count=sum(persistent.values()),
        final_progress=final_progress,
    )
