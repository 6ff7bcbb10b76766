"""Fixed-duration segmentation, per-segment violations, threshold calibration.

Episodes are tiled into ceil(duration / segment_duration_s) segments (the
final one may be shorter). Each segment is tested against per-metric
thresholds for "exceed" and "near" violations; thresholds come from a
percentile over pooled per-segment values of expert reference episodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .episode import Episode
from .errors import EmptyEpisode, MissingThreshold, NoReferences
from .metrics import (
    MetricConfig,
    MetricId,
    evaluate_episode,
    evaluate_window,
    nearest_rank_percentile,
    static_threshold,
)

DEFAULT_SEGMENT_DURATION_S = 2.5


@dataclass
class Segment:
    index: int          # 1-based
    t_start: float
    t_end: float
    start_idx: int      # sample window [start_idx, end_idx)
    end_idx: int

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_start + self.t_end)


@dataclass
class ThresholdProfile:
    """Per-task calibrated thresholds plus the metric configuration that produced them."""

    task_id: str
    thresholds: dict[MetricId, float]
    metric_config: MetricConfig
    near_margin_eta: float = 0.15
    epsilon: float = 1e-6
    calibration_percentile: float = 95.0
    segment_duration_s: float = DEFAULT_SEGMENT_DURATION_S
    calibrated_from: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def save(self, path: str | Path) -> None:
        data = {
            "task_id": self.task_id,
            "thresholds": {m.value: v for m, v in self.thresholds.items()},
            "near_margin_eta": self.near_margin_eta,
            "epsilon": self.epsilon,
            "calibration_percentile": self.calibration_percentile,
            "segment_duration_s": self.segment_duration_s,
            "metric_config": self.metric_config.to_json(),
            "calibrated_from": self.calibrated_from,
            "warnings": self.warnings,
        }
        Path(path).write_text(
            json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "ThresholdProfile":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            task_id=data["task_id"],
            thresholds={MetricId(k): float(v) for k, v in data["thresholds"].items()},
            metric_config=MetricConfig.from_json(data["metric_config"]),
            near_margin_eta=data["near_margin_eta"],
            epsilon=data["epsilon"],
            calibration_percentile=data["calibration_percentile"],
            segment_duration_s=data["segment_duration_s"],
            calibrated_from=list(data.get("calibrated_from", [])),
            warnings=list(data.get("warnings", [])),
        )


@dataclass
class SegmentReport:
    segment: Segment
    values: dict[MetricId, float]          # absent metrics omitted
    exceed: dict[MetricId, bool]
    near: dict[MetricId, bool]


def partition_episode(
    e: Episode, segment_duration_s: float = DEFAULT_SEGMENT_DURATION_S
) -> list[Segment]:
    """Tile the episode into J = ceil(duration / segment_duration_s) segments.

    Every sample lands in exactly one segment; the final segment may be short.
    """
    if e.n_samples == 0:
        raise EmptyEpisode(e.episode_id)
    duration = e.duration_s
    if duration <= 0:
        raise EmptyEpisode(f"{e.episode_id}: zero duration")
    t0 = float(e.times[0])
    n_seg = max(1, math.ceil(duration / segment_duration_s))
    segments = []
    start_idx = 0
    for j in range(1, n_seg + 1):
        t_start = t0 + (j - 1) * segment_duration_s
        t_end = min(t0 + j * segment_duration_s, t0 + duration)
        if j == n_seg:
            end_idx = e.n_samples
        else:
            # samples with t in [t_start, t_end) belong to segment j
            end_idx = int(e.times.searchsorted(t_end, side="left"))
        segments.append(Segment(j, float(t_start), float(t_end), start_idx, end_idx))
        start_idx = end_idx
    return segments


def segment_violations(
    e: Episode, segments: list[Segment], profile: ThresholdProfile
) -> list[SegmentReport]:
    """Exceed/near violation indicators per segment and metric.

    Exceed: value > threshold. Near: value <= threshold, threshold is
    meaningfully positive, and the relative shortfall is within eta.
    """
    cfg = profile.metric_config
    theta_static = static_threshold(e.actions, cfg, e.gripper_channel)
    reports = []
    for seg in segments:
        if seg.end_idx <= seg.start_idx:
            reports.append(SegmentReport(seg, {}, {}, {}))
            continue
        raw = evaluate_window(e, seg.start_idx, seg.end_idx, cfg, theta_static)
        values: dict[MetricId, float] = {}
        exceed: dict[MetricId, bool] = {}
        near: dict[MetricId, bool] = {}
        for m, v in raw.items():
            if v is None:
                continue
            if m not in profile.thresholds:
                raise MissingThreshold(m.value)
            theta = profile.thresholds[m]
            values[m] = v
            exceed[m] = v > theta
            near[m] = (
                not exceed[m]
                and theta > profile.epsilon
                and (theta - v) / max(theta, profile.epsilon) <= profile.near_margin_eta
            )
        reports.append(SegmentReport(seg, values, exceed, near))
    return reports


def calibrate_thresholds(
    references: list[Episode],
    cfg: MetricConfig,
    percentile: float = 95.0,
    segment_duration_s: float = DEFAULT_SEGMENT_DURATION_S,
    bad_anchor_multiple: float = 2.0,
) -> ThresholdProfile:
    """Calibrate per-metric thresholds and subscore anchors from expert references.

    Thresholds are the nearest-rank percentile of per-segment values pooled
    across all references. Subscore anchors come from the per-episode values:
    good = median, bad = good + bad_anchor_multiple * (p95 - good), with a
    small fallback span when the references are (near-)constant.
    """
    if not references:
        raise NoReferences("need at least one reference episode")
    cfg = MetricConfig(
        saturation_margin_fraction=cfg.saturation_margin_fraction,
        degenerate_range_epsilon=cfg.degenerate_range_epsilon,
        gripper_binarize_threshold=cfg.gripper_binarize_threshold,
        static_percentile=cfg.static_percentile,
        ldlj_floor=cfg.ldlj_floor,
        weights=dict(cfg.weights),
        subscore_anchors=dict(cfg.subscore_anchors),
    )
    pooled: dict[MetricId, list[float]] = {m: [] for m in MetricId}
    episode_level: dict[MetricId, list[float]] = {m: [] for m in MetricId}
    warnings: list[str] = []
    for ref in references:
        segs = partition_episode(ref, segment_duration_s)
        theta_static = static_threshold(ref.actions, cfg, ref.gripper_channel)
        for seg in segs:
            if seg.end_idx <= seg.start_idx:
                continue
            raw = evaluate_window(ref, seg.start_idx, seg.end_idx, cfg, theta_static)
            for m, v in raw.items():
                if v is not None:
                    pooled[m].append(v)
        for r in evaluate_episode_raw(ref, cfg):
            m, v = r
            if v is not None:
                episode_level[m].append(v)

    thresholds: dict[MetricId, float] = {}
    for m in MetricId:
        vals = pooled[m]
        if not vals:
            warnings.append(f"no reference values for {m.value}; metric uncalibrated")
            continue
        if len(vals) < 5:
            warnings.append(f"fewer than 5 pooled segments for {m.value}")
        thresholds[m] = nearest_rank_percentile(vals, percentile)

    for m in MetricId:
        vals = episode_level[m]
        if not vals:
            continue
        good = nearest_rank_percentile(vals, 50.0)
        p95 = nearest_rank_percentile(vals, 95.0)
        span = max(p95 - good, max(0.05 * abs(good), 1e-3))
        cfg.subscore_anchors[m] = (good, good + bad_anchor_multiple * span)

    warnings.append("near-rule: relative eta-margin completion (see profile fields)")
    return ThresholdProfile(
        task_id=references[0].task_id,
        thresholds=thresholds,
        metric_config=cfg,
        calibration_percentile=percentile,
        segment_duration_s=segment_duration_s,
        calibrated_from=[r.episode_id for r in references],
        warnings=warnings,
    )


def evaluate_episode_raw(e: Episode, cfg: MetricConfig):
    """(metric, raw value or None) pairs at episode level, without subscores."""
    raw = evaluate_window(e, 0, e.n_samples, cfg)
    return [(m, raw[m]) for m in MetricId]
