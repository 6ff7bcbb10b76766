"""Operator feedback synthesis: what failed, where, and what to change.

A constrained text-only provider turns the assembled assessment into a
short list of structured feedback items; a deterministic rule-based
fallback guarantees output when the provider is unreachable. Every
critical or warning item must cite resolvable evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from .episode import TaskContext
from .errors import MixedEpisode, ProviderError
from .evidence import EpisodeClassification, EvidenceItem, ViolationStatus
from .metrics import MetricId
from .semantic import SemanticTrace


class Severity(str, Enum):
    CRITICAL = "critical"
    WARNING = "warning"
    NOTE = "note"


_SEVERITY_RANK = {Severity.CRITICAL: 0, Severity.WARNING: 1, Severity.NOTE: 2}

DEFAULT_ITEM_CAP = 5

# Canned corrective phrases per metric for the fallback synthesizer.
DEFAULT_PHRASES: dict[MetricId, str] = {
    MetricId.SATURATION: "keep the arms away from joint limits during {subtask}",
    MetricId.LDLJ: "slow down and smooth out the motion during {subtask}",
    MetricId.CHATTER: "commit to a single grasp; avoid toggling the gripper during {subtask}",
    MetricId.STATIC: "keep the arms moving; avoid pausing mid-task during {subtask}",
}


@dataclass
class FeedbackInput:
    episode_id: str
    trace: SemanticTrace
    evidence: list[EvidenceItem]
    quality: float
    expert_instructions: str
    classification: EpisodeClassification
    plan: list[str] = field(default_factory=list)


@dataclass
class FeedbackItem:
    what: str
    where_window: tuple[float, float]
    where_subtask: str
    change: str
    severity: Severity
    evidence_refs: list[str] = field(default_factory=list)  # "evidence:<i>" | "trace:<t>"


class FeedbackProvider(Protocol):
    def generate(self, input: FeedbackInput, phrases: dict, cap: int) -> list[FeedbackItem]: ...


def assemble_input(
    trace: SemanticTrace,
    evidence: list[EvidenceItem],
    q: float,
    classification: EpisodeClassification,
    ctx: TaskContext,
) -> FeedbackInput:
    if trace.episode_id != classification.episode_id:
        raise MixedEpisode(
            f"trace is for {trace.episode_id}, classification for {classification.episode_id}"
        )
    return FeedbackInput(
        episode_id=trace.episode_id,
        trace=trace,
        evidence=evidence,
        quality=q,
        expert_instructions=ctx.expert_instructions,
        classification=classification,
        plan=list(ctx.plan),
    )


def _ref_resolves(ref: str, input: FeedbackInput) -> bool:
    kind, _, value = ref.partition(":")
    if kind == "evidence":
        try:
            return 0 <= int(value) < len(input.evidence)
        except ValueError:
            return False
    if kind == "trace":
        try:
            t = float(value)
        except ValueError:
            return False
        return any(abs(u.t - t) < 1e-9 for u in input.trace.updates)
    return False


def validate_items(
    items: list[FeedbackItem], input: FeedbackInput
) -> tuple[list[FeedbackItem], int]:
    """Drop items violating the contract; returns (kept, dropped_count)."""
    kept = []
    dropped = 0
    for it in items:
        if not (it.what and it.where_subtask and it.change):
            dropped += 1
            continue
        if not all(_ref_resolves(r, input) for r in it.evidence_refs):
            dropped += 1
            continue
        if it.severity in (Severity.CRITICAL, Severity.WARNING) and not it.evidence_refs:
            dropped += 1
            continue
        kept.append(it)
    return kept, dropped


def _subtask_name(input: FeedbackInput, index: int | None) -> str:
    if input.plan and index is not None and 1 <= index <= len(input.plan):
        return input.plan[index - 1]
    return f"subtask {index}" if index is not None else "unknown subtask"


def synthesize_fallback(
    input: FeedbackInput,
    phrases: dict[MetricId, str] | None = None,
    cap: int = DEFAULT_ITEM_CAP,
) -> list[FeedbackItem]:
    """Deterministic rule-based feedback in fixed priority order.

    1. task-completion gap, 2. anomaly clusters, 3. persistent threshold
    violations (one item per metric), 4. low quality score, 5. near-threshold
    warnings. Most severe items first, capped.
    """
    phrases = phrases or DEFAULT_PHRASES
    items: list[FeedbackItem] = []
    trace = input.trace
    cls = input.classification

    # 1. completion gap
    if trace.updates and trace.final_progress < 100.0:
        last = trace.updates[-1]
        severity = Severity.CRITICAL if "incomplete" in cls.reasons else Severity.NOTE
        items.append(
            FeedbackItem(
                what=f"task incomplete: progress reached {trace.final_progress:.0f}% "
                f"of {len(input.plan)} planned subtasks",
                where_window=(last.t, last.t),
                where_subtask=_subtask_name(input, last.subtask_index),
                change=f"finish the remaining steps, ending with "
                f"'{input.plan[-1] if input.plan else 'the final subtask'}'",
                severity=severity,
                evidence_refs=[f"trace:{last.t!r}"],
            )
        )

    # 2. anomaly clusters (consecutive anomalous updates grouped)
    cluster: list = []
    clusters = []
    for u in trace.updates:
        if u.anomaly:
            cluster.append(u)
        elif cluster:
            clusters.append(cluster)
            cluster = []
    if cluster:
        clusters.append(cluster)
    for group in clusters:
        first, last_u = group[0], group[-1]
        rationale = next((u.rationale for u in group if u.rationale), "")
        items.append(
            FeedbackItem(
                what="anomalous task progression (backtracking or progress drop)"
                + (f": {rationale}" if rationale else ""),
                where_window=(first.t, last_u.t),
                where_subtask=_subtask_name(input, first.subtask_index),
                change="re-watch the reference demonstration for this phase and "
                "execute it in one continuous motion",
                severity=Severity.WARNING,
                evidence_refs=[f"trace:{u.t!r}" for u in group],
            )
        )

    # 3. persistent telemetry violations, one item per flagged metric
    for reason in cls.reasons:
        if not reason.startswith("persistent:"):
            continue
        metric = MetricId(reason.split(":", 1)[1])
        refs = [
            f"evidence:{i}"
            for i, it in enumerate(input.evidence)
            if it.metric is metric and it.status is ViolationStatus.EXCEED
        ]
        hits = [
            it
            for it in input.evidence
            if it.metric is metric and it.status is ViolationStatus.EXCEED
        ]
        if not hits:
            continue
        first = hits[0]
        subtask = first.aligned_subtask or _subtask_name(
            input, first.aligned_subtask_index
        )
        items.append(
            FeedbackItem(
                what=f"{metric.value} exceeded its threshold in "
                f"{len(hits)} segment(s) (worst {max(h.observed for h in hits):.3g} "
                f"vs threshold {first.threshold:.3g})",
                where_window=(first.window[0], hits[-1].window[1]),
                where_subtask=subtask,
                change=phrases.get(metric, "adjust control during {subtask}").format(
                    subtask=subtask
                ),
                severity=Severity.CRITICAL,
                evidence_refs=refs,
            )
        )

    # 4. low aggregate quality (only needed when nothing above explains it)
    if "low-quality" in cls.reasons and trace.updates:
        last = trace.updates[-1]
        items.append(
            FeedbackItem(
                what=f"overall execution quality is low (score {input.quality:.1f}/10)",
                where_window=(trace.updates[0].t, last.t),
                where_subtask=_subtask_name(input, last.subtask_index),
                change="review the expert references and prioritize smooth, "
                "deliberate motion over speed",
                severity=Severity.WARNING,
                evidence_refs=[f"trace:{last.t!r}"],
            )
        )

    # 5. near-threshold warnings, one item per metric
    near_by_metric: dict[MetricId, list[int]] = {}
    for i, it in enumerate(input.evidence):
        if it.status is ViolationStatus.NEAR:
            near_by_metric.setdefault(it.metric, []).append(i)
    for metric in MetricId:
        if metric not in near_by_metric:
            continue
        idxs = near_by_metric[metric]
        first = input.evidence[idxs[0]]
        subtask = first.aligned_subtask or _subtask_name(
            input, first.aligned_subtask_index
        )
        items.append(
            FeedbackItem(
                what=f"{metric.value} came close to its threshold in "
                f"{len(idxs)} segment(s)",
                where_window=first.window,
                where_subtask=subtask,
                change=phrases.get(metric, "adjust control during {subtask}").format(
                    subtask=subtask
                ),
                severity=Severity.NOTE,
                evidence_refs=[f"evidence:{i}" for i in idxs],
            )
        )

    items, _ = validate_items(items, input)
    items.sort(key=lambda it: _SEVERITY_RANK[it.severity])
    return items[:cap]


class HttpFeedbackProvider:
    """Client for a hosted language model behind the feedback HTTP contract.

    Sends the serialized feedback input, phrase table, and item cap; the
    response must be a JSON array of feedback-item objects (prose-only
    responses are a ProviderError, which triggers the fallback).
    """

    def __init__(self, url: str, api_key: str | None = None, timeout_s: float = 30.0):
        self.url = url
        self.api_key = api_key
        self.timeout_s = timeout_s

    def generate(
        self, input: FeedbackInput, phrases: dict, cap: int
    ) -> list[FeedbackItem]:
        import httpx

        payload = {
            "input": {
                "episode_id": input.episode_id,
                "q": input.quality,
                "expert_instructions": input.expert_instructions,
                "plan": input.plan,
                "label": input.classification.label,
                "reasons": input.classification.reasons,
                "final_progress": input.classification.final_progress,
                "trace": [
                    {
                        "t": u.t,
                        "progress": u.progress,
                        "subtask_index": u.subtask_index,
                        "rationale": u.rationale,
                        "anomaly": u.anomaly,
                    }
                    for u in input.trace.updates
                ],
                "evidence": [
                    {
                        "index": i,
                        "metric": it.metric.value,
                        "observed": it.observed,
                        "threshold": it.threshold,
                        "status": it.status.value,
                        "window": list(it.window),
                        "aligned_subtask": it.aligned_subtask,
                    }
                    for i, it in enumerate(input.evidence)
                ],
            },
            "phrase_table": {m.value: p for m, p in phrases.items()},
            "cap": cap,
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = httpx.post(
                self.url, json=payload, headers=headers, timeout=self.timeout_s
            )
            resp.raise_for_status()
            data = resp.json()
            if not isinstance(data, list):
                raise ValueError("response is not a structured item list")
            return [
                FeedbackItem(
                    what=str(d["what"]),
                    where_window=(
                        float(d["where"]["window"][0]),
                        float(d["where"]["window"][1]),
                    ),
                    where_subtask=str(d["where"]["subtask"]),
                    change=str(d["change"]),
                    severity=Severity(d["severity"]),
                    evidence_refs=[str(r) for r in d.get("evidence_refs", [])],
                )
                for d in data
            ]
        except Exception as exc:
            raise ProviderError(f"feedback provider failed: {exc}") from None


def synthesize(
    input: FeedbackInput,
    provider: FeedbackProvider | None = None,
    phrases: dict[MetricId, str] | None = None,
    cap: int = DEFAULT_ITEM_CAP,
    fallback_enabled: bool = True,
) -> list[FeedbackItem]:
    """Provider-backed synthesis with contract validation and fallback.

    Items failing validation are dropped; if the provider fails (or returns
    nothing for a failure episode) the deterministic fallback takes over.
    """
    phrases = phrases or DEFAULT_PHRASES
    if provider is not None:
        try:
            items = provider.generate(input, phrases, cap)
            items, _dropped = validate_items(items, input)
            items.sort(key=lambda it: _SEVERITY_RANK[it.severity])
            items = items[:cap]
            if items or input.classification.label != "failure":
                return items
        except ProviderError:
            if not fallback_enabled:
                raise
    elif not fallback_enabled:
        raise ProviderError("no provider configured and fallback disabled")
    return synthesize_fallback(input, phrases, cap)
