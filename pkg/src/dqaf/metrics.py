"""Telemetry quality metrics and episode-level score aggregation.

Four metrics are computed over any sample window: action-range saturation,
log dimensionless jerk (LDLJ), gripper chatter rate, and static fraction.
All four are direction-aligned so that a larger raw value is worse.
Normalized subscores are piecewise-linear between per-metric anchors and
aggregated into a quality score in [0, 10] with nonnegative weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .episode import Episode
from .errors import (
    AllWeightsZero,
    DimensionMismatch,
    MissingAnchors,
    NoGripperChannel,
    WindowTooShort,
)


class MetricId(str, Enum):
    SATURATION = "saturation"
    LDLJ = "ldlj"
    CHATTER = "chatter"
    STATIC = "static"


# Minimum samples for a third finite difference.
LDLJ_MIN_SAMPLES = 4


@dataclass
class MetricConfig:
    """Tunables shared by all metric computations.

    weights and subscore_anchors are keyed by MetricId; anchors are
    (good_value, bad_value) pairs mapping raw values to subscores 1 and 0.
    """

    saturation_margin_fraction: float = 0.01
    degenerate_range_epsilon: float = 1e-9
    gripper_binarize_threshold: float = 0.5
    static_percentile: float = 10.0
    ldlj_floor: float = -20.0
    weights: dict[MetricId, float] = field(
        default_factory=lambda: {m: 1.0 for m in MetricId}
    )
    subscore_anchors: dict[MetricId, tuple[float, float]] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "saturation_margin_fraction": self.saturation_margin_fraction,
            "degenerate_range_epsilon": self.degenerate_range_epsilon,
            "gripper_binarize_threshold": self.gripper_binarize_threshold,
            "static_percentile": self.static_percentile,
            "ldlj_floor": self.ldlj_floor,
            "weights": {m.value: w for m, w in self.weights.items()},
            "subscore_anchors": {
                m.value: [g, b] for m, (g, b) in self.subscore_anchors.items()
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "MetricConfig":
        return cls(
            saturation_margin_fraction=data["saturation_margin_fraction"],
            degenerate_range_epsilon=data["degenerate_range_epsilon"],
            gripper_binarize_threshold=data["gripper_binarize_threshold"],
            static_percentile=data["static_percentile"],
            ldlj_floor=data.get("ldlj_floor", -20.0),
            weights={MetricId(k): float(v) for k, v in data["weights"].items()},
            subscore_anchors={
                MetricId(k): (float(g), float(b))
                for k, (g, b) in data["subscore_anchors"].items()
            },
        )


@dataclass
class MetricResult:
    metric: MetricId
    raw_value: float
    subscore: float
    present: bool = True
    note: str | None = None


def action_saturation(
    actions: np.ndarray, bounds: np.ndarray, cfg: MetricConfig
) -> float:
    """Mean over valid dims of the per-dim fraction of steps within the bound margin.

    Dims whose bound range is below degenerate_range_epsilon are excluded;
    with no valid dims the rate is 0.
    """
    actions = np.asarray(actions, dtype=float)
    if actions.ndim != 2 or actions.shape[0] == 0:
        raise DimensionMismatch("expected a nonempty (T, d) action window")
    if bounds.shape != (actions.shape[1], 2):
        raise DimensionMismatch("bounds do not cover all action dims")
    lo, hi = bounds[:, 0], bounds[:, 1]
    rng = hi - lo
    valid = rng >= cfg.degenerate_range_epsilon
    if not np.any(valid):
        return 0.0
    margin = cfg.saturation_margin_fraction * rng[valid]
    a = actions[:, valid]
    near = (a <= lo[valid] + margin) | (a >= hi[valid] - margin)
    return float(near.mean(axis=0).mean())


def ldlj(states: np.ndarray, rate_hz: float, floor: float = -20.0) -> float:
    """Log dimensionless jerk of a joint-position window; larger is jerkier.

    log(T^3 / v_max^2 * integral ||jerk||^2 dt) with central-difference
    derivatives and trapezoidal integration. Zero-motion windows (v_max
    or the jerk integral at numeric zero) return the configured floor.
    """
    x = np.asarray(states, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < LDLJ_MIN_SAMPLES:
        raise WindowTooShort(f"need >= {LDLJ_MIN_SAMPLES} samples, got {x.shape[0]}")
    dt = 1.0 / rate_hz
    duration = dt * (x.shape[0] - 1)
    vel = np.gradient(x, dt, axis=0, edge_order=2)
    v_max = float(np.max(np.linalg.norm(vel, axis=1)))
    if x.shape[0] >= 5:
        # Central third difference on interior points only; repeated gradient
        # calls amplify one-sided edge errors without bound as dt shrinks.
        jerk = (x[4:] - 2 * x[3:-1] + 2 * x[1:-3] - x[:-4]) / (2 * dt**3)
    else:
        jerk = np.diff(x, n=3, axis=0) / dt**3
    integral = float(np.trapezoid(np.sum(jerk**2, axis=1), dx=dt))
    if v_max < 1e-12 or integral <= 0.0:
        return floor
    # clamp numerically-zero jerk (e.g. exact constant velocity) at the floor
    return float(max(np.log(duration**3 / v_max**2 * integral), floor))


def binarize_gripper(commands: np.ndarray, cfg: MetricConfig) -> np.ndarray:
    """Binarize a gripper command series at a fraction of its observed range."""
    commands = np.asarray(commands, dtype=float)
    lo, hi = commands.min(), commands.max()
    if hi - lo < cfg.degenerate_range_epsilon:
        return np.zeros(len(commands), dtype=int)
    return (commands > lo + cfg.gripper_binarize_threshold * (hi - lo)).astype(int)


def gripper_chatter(
    actions: np.ndarray, channel: int | None, duration_s: float, cfg: MetricConfig
) -> float:
    """Open/close transitions per second of the binarized gripper command."""
    actions = np.asarray(actions, dtype=float)
    if channel is None or not (0 <= channel < actions.shape[1]):
        raise NoGripperChannel(f"invalid gripper channel {channel}")
    if duration_s <= 0:
        raise NoGripperChannel("window duration must be positive")
    b = binarize_gripper(actions[:, channel], cfg)
    transitions = int(np.sum(np.abs(np.diff(b))))
    return transitions / duration_s


def action_norms(actions: np.ndarray, gripper_channel: int | None = None) -> np.ndarray:
    """Per-step L2 action magnitude; the gripper command dim is excluded because
    a held grasp command is not arm motion."""
    actions = np.asarray(actions, dtype=float)
    if gripper_channel is not None:
        keep = [i for i in range(actions.shape[1]) if i != gripper_channel]
        actions = actions[:, keep]
    return np.linalg.norm(actions, axis=1)


def static_threshold(
    episode_actions: np.ndarray,
    cfg: MetricConfig,
    gripper_channel: int | None = None,
) -> float:
    """Adaptive near-zero threshold: a percentile of the full-episode action norms."""
    norms = action_norms(episode_actions, gripper_channel)
    return nearest_rank_percentile(norms, cfg.static_percentile)


def static_fraction(
    window_actions: np.ndarray,
    theta: float,
    gripper_channel: int | None = None,
) -> float:
    """Fraction of window steps with action magnitude below theta."""
    norms = action_norms(window_actions, gripper_channel)
    if len(norms) == 0:
        raise DimensionMismatch("empty window")
    return float(np.mean(norms < theta))


def nearest_rank_percentile(values, p: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th order statistic."""
    vals = np.sort(np.asarray(values, dtype=float))
    if len(vals) == 0:
        raise ValueError("no values")
    rank = int(np.ceil(p / 100.0 * len(vals)))
    rank = min(max(rank, 1), len(vals))
    return float(vals[rank - 1])


def subscore(metric: MetricId, raw: float, cfg: MetricConfig) -> float:
    """Piecewise-linear map: 1 at the good anchor, 0 at the bad anchor, clamped."""
    if metric not in cfg.subscore_anchors:
        raise MissingAnchors(f"no anchors configured for {metric.value}")
    good, bad = cfg.subscore_anchors[metric]
    if good == bad:
        raise MissingAnchors(f"degenerate anchors for {metric.value}")
    phi = (bad - raw) / (bad - good)
    return float(min(max(phi, 0.0), 1.0))


def aggregate_quality(results: list[MetricResult], cfg: MetricConfig) -> float:
    """Weighted mean of present subscores scaled to [0, 10]."""
    num = 0.0
    den = 0.0
    for r in results:
        if not r.present:
            continue
        w = cfg.weights.get(r.metric, 0.0)
        num += w * r.subscore
        den += w
    if den <= 0:
        raise AllWeightsZero("no present metric has positive weight")
    return 10.0 * num / den


def evaluate_window(
    e: Episode,
    start: int,
    end: int,
    cfg: MetricConfig,
    theta_static: float | None = None,
) -> dict[MetricId, float | None]:
    """Raw metric values over e.samples[start:end]; None marks absent metrics.

    theta_static defaults to the full-episode adaptive threshold; LDLJ is
    absent for windows shorter than its minimum; chatter is absent without
    a gripper channel.
    """
    actions = e.actions[start:end]
    states = e.states[start:end]
    if len(actions) == 0:
        raise DimensionMismatch("empty window")
    duration = float(e.times[min(end, e.n_samples) - 1] - e.times[start])
    if duration <= 0:
        duration = 1.0 / e.sample_rate_hz
    if theta_static is None:
        theta_static = static_threshold(e.actions, cfg, e.gripper_channel)

    values: dict[MetricId, float | None] = {}
    values[MetricId.SATURATION] = action_saturation(actions, e.action_bounds, cfg)
    if len(states) >= LDLJ_MIN_SAMPLES:
        values[MetricId.LDLJ] = ldlj(states, e.sample_rate_hz, cfg.ldlj_floor)
    else:
        values[MetricId.LDLJ] = None
    if e.gripper_channel is not None:
        values[MetricId.CHATTER] = gripper_chatter(
            actions, e.gripper_channel, duration, cfg
        )
    else:
        values[MetricId.CHATTER] = None
    values[MetricId.STATIC] = static_fraction(actions, theta_static, e.gripper_channel)
    return values


def evaluate_episode(e: Episode, cfg: MetricConfig) -> list[MetricResult]:
    """Episode-level metric results with subscores, for quality aggregation."""
    raw = evaluate_window(e, 0, e.n_samples, cfg)
    results = []
    for m in MetricId:
        v = raw[m]
        if v is None:
            results.append(MetricResult(m, float("nan"), 0.0, present=False))
            continue
        note = None
        if m is MetricId.LDLJ and v == cfg.ldlj_floor:
            note = "zero-motion floor"
        results.append(MetricResult(m, v, subscore(m, v, cfg), note=note))
    return results
