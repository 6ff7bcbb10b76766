"""Plan-conditioned semantic progress tracing via a pluggable provider.

A provider maps a structured context (anchor frame, recent clip, subtask
plan, captioned references) to a structured output (active subtask,
completion percent, rationale, anomaly flag). Two implementations ship:
an HTTP client for a hosted multimodal model, and a deterministic
scripted mock keyed by (episode_id, update_time) so tests run offline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .episode import Episode, FramePointer, TaskContext
from .errors import EmptyEpisode, NoFramesYet, ProviderError


@dataclass
class SemanticContext:
    episode_id: str
    update_time: float
    anchor: FramePointer
    clip: list[FramePointer]
    plan: list[str]
    references: list[tuple[str, str]]


@dataclass
class SemanticOutput:
    subtask_index: int        # 1-based, within plan bounds after enforcement
    completion_pct: float     # clamped to [0, 100]
    rationale: str
    anomaly: bool


@dataclass
class SemanticUpdate:
    t: float
    progress: float
    subtask_index: int
    rationale: str
    anomaly: bool


@dataclass
class SemanticTrace:
    episode_id: str
    plan_length: int
    updates: list[SemanticUpdate] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)   # update times with no output

    @property
    def final_progress(self) -> float:
        return self.updates[-1].progress if self.updates else 0.0

    @property
    def anomaly_count(self) -> int:
        return sum(1 for u in self.updates if u.anomaly)


@dataclass
class AnomalyRuleConfig:
    drop_window: int = 3            # updates considered for the sustained-drop rule
    drop_threshold: float = 15.0    # progress points
    backtrack_min_count: int = 2


class SemanticProvider(Protocol):
    def query(self, context: SemanticContext) -> SemanticOutput: ...


CLIP_LENGTH = 5
DEFAULT_UPDATE_INTERVAL_S = 2.5


def build_update_schedule(
    e: Episode, interval_s: float = DEFAULT_UPDATE_INTERVAL_S
) -> list[float]:
    """Update times {interval, 2*interval, ...}, always including the final time."""
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    if e.n_samples == 0 or e.duration_s <= 0:
        raise EmptyEpisode(e.episode_id)
    duration = e.duration_s
    times = []
    k = 1
    while k * interval_s <= duration + 1e-9:
        times.append(round(k * interval_s, 9))
        k += 1
    if not times or times[-1] < duration - 1e-9:
        times.append(duration)
    return times


def build_context(e: Episode, ctx: TaskContext, t: float) -> SemanticContext:
    """Anchor = first frame; clip = the up-to-5 most recent frames at or before t."""
    available = [f for f in e.frames if f.t <= t + 1e-9]
    if not available:
        raise NoFramesYet(f"no frames at or before t={t}")
    return SemanticContext(
        episode_id=e.episode_id,
        update_time=t,
        anchor=e.frames[0],
        clip=available[-CLIP_LENGTH:],
        plan=list(ctx.plan),
        references=list(ctx.reference_frames),
    )


def global_progress(subtask_index: int, completion_pct: float, plan_length: int) -> float:
    """Map a subtask-local completion onto [0, 100] over the whole plan."""
    if not (1 <= subtask_index <= plan_length):
        raise ValueError(f"subtask index {subtask_index} outside 1..{plan_length}")
    if not (0.0 <= completion_pct <= 100.0):
        raise ValueError(f"completion {completion_pct} outside [0, 100]")
    return (100.0 / plan_length) * ((subtask_index - 1) + completion_pct / 100.0)


def query_provider(
    provider: SemanticProvider, context: SemanticContext
) -> SemanticOutput:
    """Query with post-hoc invariant enforcement.

    Out-of-range subtask indices are clamped into the plan and the output is
    flagged anomalous; completion is clamped to [0, 100]. ProviderError
    propagates (after the provider's own retry) for the caller to record a gap.
    """
    out = provider.query(context)
    plan_len = len(context.plan)
    idx = int(out.subtask_index)
    anomaly = bool(out.anomaly)
    if not (1 <= idx <= plan_len):
        idx = min(max(idx, 1), plan_len)
        anomaly = True
    pct = float(min(max(out.completion_pct, 0.0), 100.0))
    return SemanticOutput(idx, pct, str(out.rationale), anomaly)


def detect_anomalies(
    updates: list[SemanticUpdate], rules: AnomalyRuleConfig
) -> list[SemanticUpdate]:
    """Apply the sustained-drop and repeated-backtracking rules.

    Provider-set flags are never cleared. An update is flagged when progress
    dropped by at least drop_threshold within the last drop_window updates,
    or once the subtask index has regressed backtrack_min_count times.
    """
    out = []
    backtracks = 0
    for k, u in enumerate(updates):
        flag = u.anomaly
        window = updates[max(0, k - rules.drop_window + 1) : k + 1]
        if window and max(w.progress for w in window) - u.progress >= rules.drop_threshold:
            flag = True
        if k > 0 and u.subtask_index < updates[k - 1].subtask_index:
            backtracks += 1
        if backtracks >= rules.backtrack_min_count:
            flag = True
        out.append(SemanticUpdate(u.t, u.progress, u.subtask_index, u.rationale, flag))
    return out


def build_trace(
    e: Episode,
    ctx: TaskContext,
    provider: SemanticProvider,
    interval_s: float = DEFAULT_UPDATE_INTERVAL_S,
    rules: AnomalyRuleConfig | None = None,
) -> SemanticTrace:
    """Assemble the semantic trace; individual provider failures become gaps."""
    rules = rules or AnomalyRuleConfig()
    schedule = build_update_schedule(e, interval_s)
    plan_len = len(ctx.plan)
    updates: list[SemanticUpdate] = []
    gaps: list[float] = []
    for t in schedule:
        try:
            context = build_context(e, ctx, t)
            out = query_provider(provider, context)
        except (ProviderError, NoFramesYet):
            gaps.append(t)
            continue
        updates.append(
            SemanticUpdate(
                t=t,
                progress=global_progress(out.subtask_index, out.completion_pct, plan_len),
                subtask_index=out.subtask_index,
                rationale=out.rationale,
                anomaly=out.anomaly,
            )
        )
    return SemanticTrace(e.episode_id, plan_len, detect_anomalies(updates, rules), gaps)


class ScriptedMockProvider:
    """Deterministic provider keyed by (episode_id, update_time).

    Script format (``.semmock.json``): {"episode_id": ..., "updates":
    {"<time>": {"subtask_index", "completion_pct", "rationale", "anomaly"}}}.
    Missing entries raise ProviderError so the update is recorded as a gap.
    """

    def __init__(self, episode_id: str, updates: dict[float, SemanticOutput]):
        self.episode_id = episode_id
        self.updates = {round(float(t), 6): o for t, o in updates.items()}

    def query(self, context: SemanticContext) -> SemanticOutput:
        if context.episode_id != self.episode_id:
            raise ProviderError(
                f"mock scripted for {self.episode_id}, got {context.episode_id}"
            )
        key = round(context.update_time, 6)
        if key not in self.updates:
            raise ProviderError(f"no scripted output at t={context.update_time}")
        return self.updates[key]

    def to_json(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "updates": {
                repr(t): {
                    "subtask_index": o.subtask_index,
                    "completion_pct": o.completion_pct,
                    "rationale": o.rationale,
                    "anomaly": o.anomaly,
                }
                for t, o in sorted(self.updates.items())
            },
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_json(cls, data: dict) -> "ScriptedMockProvider":
        return cls(
            data["episode_id"],
            {
                float(t): SemanticOutput(
                    int(o["subtask_index"]),
                    float(o["completion_pct"]),
                    str(o.get("rationale", "")),
                    bool(o.get("anomaly", False)),
                )
                for t, o in data["updates"].items()
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "ScriptedMockProvider":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


class HttpSemanticProvider:
    """Client for a hosted multimodal model behind the provider HTTP contract.

    Sends {anchor, clip, plan, references, instructions}; expects a single
    object {subtask_index, completion_pct, rationale, anomaly}. One retry on
    failure, then ProviderError.
    """

    def __init__(
        self,
        url: str,
        api_key: str | None = None,
        timeout_s: float = 30.0,
        instructions: str = "",
    ):
        self.url = url
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.instructions = instructions

    def _payload(self, context: SemanticContext) -> dict:
        return {
            "anchor": {"t": context.anchor.t, "uri": context.anchor.uri},
            "clip": [{"t": f.t, "uri": f.uri} for f in context.clip],
            "plan": context.plan,
            "references": [{"image": u, "caption": c} for u, c in context.references],
            "instructions": self.instructions,
        }

    def query(self, context: SemanticContext) -> SemanticOutput:
        import httpx

        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for _ in range(2):
            try:
                resp = httpx.post(
                    self.url,
                    json=self._payload(context),
                    headers=headers,
                    timeout=self.timeout_s,
                )
                resp.raise_for_status()
                data = resp.json()
                return SemanticOutput(
                    int(data["subtask_index"]),
                    float(data["completion_pct"]),
                    str(data.get("rationale", "")),
                    bool(data.get("anomaly", False)),
                )
            except Exception as exc:  # network, timeout, schema
                last_error = exc
        raise ProviderError(f"semantic provider failed after retry: {last_error}")
