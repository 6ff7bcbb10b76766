"""Seeded synthetic episodes with fault injection, plus the validation harness.

Baseline trajectories are piecewise minimum-jerk between random waypoints,
so clean episodes sit comfortably below expert-calibrated thresholds.
Faults are superimposed on telemetry or scripted into the semantic mock;
ground-truth labels live here, independent of the pipeline under test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .episode import Episode, FramePointer, TaskContext
from .errors import OverlappingFaults
from .evidence import ClassificationPolicy
from .metrics import MetricConfig
from .pipeline import Assessment, run_assessment
from .segments import ThresholdProfile, calibrate_thresholds
from .semantic import AnomalyRuleConfig, ScriptedMockProvider, SemanticOutput


class FaultKind(str, Enum):
    JERK_BURST = "jerk_burst"
    STALL = "stall"
    SATURATE = "saturate"
    CHATTER = "chatter"
    BACKTRACK = "backtrack"
    PREMATURE_STOP = "premature_stop"


# Which detection channel a fault is designed to trip.
FAULT_CHANNEL = {
    FaultKind.JERK_BURST: "ldlj",
    FaultKind.STALL: "static",
    FaultKind.SATURATE: "saturation",
    FaultKind.CHATTER: "chatter",
    FaultKind.BACKTRACK: "anomalies",
    FaultKind.PREMATURE_STOP: "incomplete",
}

SEMANTIC_KINDS = {FaultKind.BACKTRACK, FaultKind.PREMATURE_STOP}


@dataclass
class FaultSpec:
    kind: FaultKind
    t_start: float
    t_end: float
    magnitude: float = 0.0   # kind-specific; 0 selects the default

    @property
    def window(self) -> tuple[float, float]:
        return (self.t_start, self.t_end)


@dataclass
class GenerationConfig:
    duration_s: float = 50.0
    sample_rate_hz: float = 20.0
    n_joints: int = 7
    waypoint_interval_s: float = 5.0
    waypoint_scale: float = 1.0
    action_noise: float = 0.02
    velocity_bound: float = 2.0
    frame_interval_s: float = 0.5
    update_interval_s: float = 2.5
    segment_duration_s: float = 2.5
    task_id: str = "synthetic-handover"


@dataclass
class GroundTruth:
    label: str                      # "success" | "failure"
    faults: list[FaultSpec] = field(default_factory=list)
    persistent_kinds: list[FaultKind] = field(default_factory=list)


DEFAULT_PLAN = ["pick", "present", "receive", "carry", "drop"]


def make_task_context(task_id: str = "synthetic-handover") -> TaskContext:
    return TaskContext(
        task_id=task_id,
        description="transfer an object between arms and deposit it into a bin",
        plan=list(DEFAULT_PLAN),
        reference_frames=[
            (f"ref:{i}", f"expert frame during '{name}'")
            for i, name in enumerate(DEFAULT_PLAN)
        ],
        expert_instructions=(
            "Point out completion gaps first, then motion problems, and phrase "
            "every correction as a concrete action for the next attempt."
        ),
    )


def _min_jerk_profile(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized minimum-jerk position and velocity profiles on u in [0, 1]."""
    s = 10 * u**3 - 15 * u**4 + 6 * u**5
    ds = 30 * u**2 - 60 * u**3 + 30 * u**4
    return s, ds


def _smoothstep(t: np.ndarray, t0: float, t1: float) -> np.ndarray:
    u = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
    return 10 * u**3 - 15 * u**4 + 6 * u**5


def _check_overlap(faults: list[FaultSpec]) -> None:
    by_kind: dict[FaultKind, list[FaultSpec]] = {}
    for f in faults:
        by_kind.setdefault(f.kind, []).append(f)
    for kind, specs in by_kind.items():
        specs = sorted(specs, key=lambda f: f.t_start)
        for a, b in zip(specs, specs[1:]):
            if b.t_start < a.t_end:
                raise OverlappingFaults(f"overlapping {kind.value} faults")


def _is_persistent(f: FaultSpec, segment_duration_s: float) -> bool:
    if f.kind in SEMANTIC_KINDS:
        return True
    return (f.t_end - f.t_start) >= 2.0 * segment_duration_s


def generate_episode(
    seed: int,
    cfg: GenerationConfig | None = None,
    faults: list[FaultSpec] | None = None,
) -> tuple[Episode, ScriptedMockProvider, GroundTruth]:
    """Deterministic synthetic episode + scripted semantic mock + ground truth."""
    cfg = cfg or GenerationConfig()
    faults = list(faults or [])
    _check_overlap(faults)
    for f in faults:
        if not (0.0 <= f.t_start < f.t_end <= cfg.duration_s + 1e-9):
            raise ValueError(f"fault window {f.window} outside episode")

    rng = np.random.default_rng(seed)
    dt = 1.0 / cfg.sample_rate_hz
    n = int(round(cfg.duration_s * cfg.sample_rate_hz)) + 1
    times = np.arange(n) * dt

    # Piecewise minimum-jerk joint trajectory between random waypoints.
    n_way = int(np.ceil(cfg.duration_s / cfg.waypoint_interval_s)) + 1
    waypoints = rng.uniform(-cfg.waypoint_scale, cfg.waypoint_scale, (n_way, cfg.n_joints))
    pos = np.empty((n, cfg.n_joints))
    vel = np.empty((n, cfg.n_joints))
    seg_of = np.minimum(
        (times / cfg.waypoint_interval_s).astype(int), n_way - 2
    )
    u = times / cfg.waypoint_interval_s - seg_of
    s, ds = _min_jerk_profile(np.clip(u, 0.0, 1.0))
    x0 = waypoints[seg_of]
    x1 = waypoints[seg_of + 1]
    pos = x0 + (x1 - x0) * s[:, None]
    vel = (x1 - x0) * ds[:, None] / cfg.waypoint_interval_s

    # Gripper: half-open at rest, closes and reopens with smooth ramps.
    close_t = 0.3 * cfg.duration_s
    open_t = 0.7 * cfg.duration_s
    gripper = _smoothstep(times, close_t - 1.0, close_t + 1.0) - _smoothstep(
        times, open_t - 1.0, open_t + 1.0
    )

    actions = np.concatenate(
        [vel + cfg.action_noise * rng.standard_normal(vel.shape), gripper[:, None]],
        axis=1,
    )
    states = pos.copy()
    gripper_channel = cfg.n_joints

    for f in faults:
        w = (times >= f.t_start) & (times < f.t_end)
        if f.kind is FaultKind.JERK_BURST:
            mag = f.magnitude or 0.05
            states[w] = states[w] + mag * rng.standard_normal(states[w].shape)
        elif f.kind is FaultKind.STALL:
            mag = f.magnitude or 1e-3
            actions[np.ix_(w, np.arange(cfg.n_joints))] = mag * rng.uniform(
                0.0, 1.0, (int(w.sum()), cfg.n_joints)
            )
        elif f.kind is FaultKind.SATURATE:
            actions[w, 0] = cfg.velocity_bound
        elif f.kind is FaultKind.CHATTER:
            toggles = np.arange(int(w.sum())) % 2
            actions[w, gripper_channel] = toggles.astype(float)
        # semantic kinds handled in the scripted mock below

    bounds = np.array(
        [[-cfg.velocity_bound, cfg.velocity_bound]] * cfg.n_joints + [[-0.5, 1.5]]
    )
    frames = [
        FramePointer(round(t, 6), f"frame:{seed}:{t:.1f}")
        for t in np.arange(0.0, cfg.duration_s + 1e-9, cfg.frame_interval_s)
    ]
    episode = Episode(
        episode_id=f"synth-{seed:08d}",
        task_id=cfg.task_id,
        sample_rate_hz=cfg.sample_rate_hz,
        times=times,
        states=states,
        actions=actions,
        frames=frames,
        action_bounds=bounds,
        gripper_channel=gripper_channel,
    ).validate()

    mock = _script_semantics(episode, cfg, faults)
    persistent = [f.kind for f in faults if _is_persistent(f, cfg.segment_duration_s)]
    gt = GroundTruth(
        label="failure" if persistent else "success",
        faults=faults,
        persistent_kinds=persistent,
    )
    return episode, mock, gt


def _clean_semantic(t: float, duration: float, plan_len: int) -> tuple[int, float]:
    frac = min(max(t / duration, 0.0), 1.0)
    i = min(plan_len, int(frac * plan_len) + 1)
    c = (frac * plan_len - (i - 1)) * 100.0
    return i, float(min(max(c, 0.0), 100.0))


def _script_semantics(
    episode: Episode, cfg: GenerationConfig, faults: list[FaultSpec]
) -> ScriptedMockProvider:
    from .semantic import build_update_schedule

    plan_len = len(DEFAULT_PLAN)
    duration = episode.duration_s
    schedule = build_update_schedule(episode, cfg.update_interval_s)
    backtracks = [f for f in faults if f.kind is FaultKind.BACKTRACK]
    stops = [f for f in faults if f.kind is FaultKind.PREMATURE_STOP]

    updates: dict[float, SemanticOutput] = {}
    k_in_backtrack = 0
    for t in schedule:
        i, c = _clean_semantic(t, duration, plan_len)
        rationale = f"executing '{DEFAULT_PLAN[i - 1]}'"
        for f in stops:
            cap = f.magnitude or 80.0
            p = (100.0 / plan_len) * ((i - 1) + c / 100.0)
            if t >= f.t_start and p > cap:
                i = min(plan_len, int(cap / (100.0 / plan_len)) + 1)
                c = (cap - (100.0 / plan_len) * (i - 1)) / (100.0 / plan_len) * 100.0
                rationale = "progress appears stuck; scene unchanged"
        for f in backtracks:
            if f.t_start <= t < f.t_end:
                if k_in_backtrack % 2 == 1:
                    i = max(1, i - 1)
                    rationale = "regressed to an earlier subtask"
                k_in_backtrack += 1
        updates[t] = SemanticOutput(i, round(c, 4), rationale, False)
    return ScriptedMockProvider(episode.episode_id, updates)


@dataclass
class LatencyBudget:
    n_calls: int
    per_call_s: float
    final_call_s: float
    total_s: float
    overlap_fraction: float
    residual_s: float

    def to_json(self) -> dict:
        return {
            "n_calls": self.n_calls,
            "per_call_s": self.per_call_s,
            "final_call_s": self.final_call_s,
            "total_s": self.total_s,
            "overlap_fraction": self.overlap_fraction,
            "residual_s": self.residual_s,
        }


def latency_budget(
    n_calls: int,
    per_call_s: float,
    final_call_s: float,
    overlap_fraction: float = 0.0,
) -> LatencyBudget:
    """Post-episode latency arithmetic: total = n*per_call + final; the
    residual discounts the fraction of semantic calls overlapped with recording."""
    if min(n_calls, per_call_s, final_call_s, overlap_fraction) < 0:
        raise ValueError("latency inputs must be nonnegative")
    semantic = n_calls * per_call_s
    return LatencyBudget(
        n_calls=n_calls,
        per_call_s=per_call_s,
        final_call_s=final_call_s,
        total_s=semantic + final_call_s,
        overlap_fraction=overlap_fraction,
        residual_s=(1.0 - overlap_fraction) * semantic + final_call_s,
    )


@dataclass
class ValidationReport:
    tp: int
    fp: int
    fn: int
    tn: int
    recall: float
    precision: float
    per_fault_detection: dict[str, float]
    latency: LatencyBudget

    def to_json(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "recall": self.recall,
            "precision": self.precision,
            "per_fault_detection": self.per_fault_detection,
            "latency": self.latency.to_json(),
        }

    def table(self) -> str:
        lines = [
            "validation report",
            f"  tp={self.tp} fp={self.fp} fn={self.fn} tn={self.tn}",
            f"  recall={self.recall:.3f} precision={self.precision:.3f}",
        ]
        for kind, rate in sorted(self.per_fault_detection.items()):
            lines.append(f"  {kind}: {rate:.2f}")
        lines.append(
            f"  latency: total={self.latency.total_s:.1f}s "
            f"residual={self.latency.residual_s:.1f}s"
        )
        return "\n".join(lines)


def confusion_report(
    tp: int, fp: int, fn: int, tn: int, latency: LatencyBudget | None = None
) -> ValidationReport:
    """Build a report from raw counts (used to re-derive published figures)."""
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    return ValidationReport(
        tp, fp, fn, tn, recall, precision, {}, latency or latency_budget(20, 2.0, 3.0)
    )


FAILURE_KIND_CYCLE = [
    FaultKind.STALL,
    FaultKind.SATURATE,
    FaultKind.CHATTER,
    FaultKind.JERK_BURST,
    FaultKind.BACKTRACK,
    FaultKind.PREMATURE_STOP,
]


def default_fault(kind: FaultKind, cfg: GenerationConfig, offset: int = 0) -> FaultSpec:
    """A persistent fault of the given kind, placed mid-episode."""
    seg = cfg.segment_duration_s
    start = 0.3 * cfg.duration_s + (offset % 3) * seg
    if kind is FaultKind.PREMATURE_STOP:
        return FaultSpec(kind, 0.8 * cfg.duration_s, cfg.duration_s, magnitude=80.0)
    if kind is FaultKind.BACKTRACK:
        return FaultSpec(kind, start, start + 5 * cfg.update_interval_s)
    return FaultSpec(kind, start, start + 4 * seg)


def make_reference_profile(
    seed: int,
    n_references: int = 16,
    cfg: GenerationConfig | None = None,
    metric_config: MetricConfig | None = None,
    percentile: float = 99.0,
) -> ThresholdProfile:
    """Calibrate a profile from freshly generated clean reference episodes.

    The harness calibrates above the library default percentile so that
    cohort-level false positives stay within the acceptance budget.
    """
    cfg = cfg or GenerationConfig()
    refs = [
        generate_episode(seed + i, cfg)[0] for i in range(n_references)
    ]
    return calibrate_thresholds(
        refs,
        metric_config or MetricConfig(),
        percentile=percentile,
        segment_duration_s=cfg.segment_duration_s,
    )


def run_validation(
    n_success: int,
    n_failure: int,
    seed: int,
    profile: ThresholdProfile,
    policy: ClassificationPolicy | None = None,
    cfg: GenerationConfig | None = None,
    rules: AnomalyRuleConfig | None = None,
) -> ValidationReport:
    """Generate a cohort, run the full pipeline with scripted mocks, and
    score classifications against the generator's ground truth."""
    cfg = cfg or GenerationConfig()
    policy = policy or ClassificationPolicy()
    ctx = make_task_context(cfg.task_id)

    episodes: list[tuple[Episode, ScriptedMockProvider, GroundTruth]] = []
    for i in range(n_success):
        episodes.append(generate_episode(seed + 1000 + i, cfg))
    for i in range(n_failure):
        kind = FAILURE_KIND_CYCLE[i % len(FAILURE_KIND_CYCLE)]
        fault = default_fault(kind, cfg, offset=i)
        episodes.append(generate_episode(seed + 5000 + i, cfg, [fault]))

    tp = fp = fn = tn = 0
    per_fault_hits: dict[str, list[bool]] = {}
    for ep, mock, gt in episodes:
        assessment: Assessment = run_assessment(
            ep, ctx, mock, profile, policy=policy, rules=rules
        )
        predicted_failure = assessment.classification.label == "failure"
        actual_failure = gt.label == "failure"
        if actual_failure and predicted_failure:
            tp += 1
        elif actual_failure and not predicted_failure:
            fn += 1
        elif not actual_failure and predicted_failure:
            fp += 1
        else:
            tn += 1
        for f in gt.faults:
            per_fault_hits.setdefault(f.kind.value, []).append(predicted_failure)

    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    per_fault = {
        kind: sum(hits) / len(hits) for kind, hits in per_fault_hits.items()
    }
    return ValidationReport(
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        recall=recall,
        precision=precision,
        per_fault_detection=per_fault,
        latency=latency_budget(20, 2.0, 3.0, overlap_fraction=0.6),
    )
