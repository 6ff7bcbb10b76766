"""Episode and task-context domain types plus on-disk ingestion.

Episode files are line-delimited JSON (``.dqaf.jsonl``): one header line,
then one line per telemetry sample, then one line per frame pointer.
Task contexts are plain JSON (``.task.json``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class FramePointer:
    """Reference to a camera frame: a relative path or an opaque token in synthetic mode."""

    t: float
    uri: str


@dataclass
class TelemetrySample:
    t: float
    state: np.ndarray
    action: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, TelemetrySample):
            return NotImplemented
        return (
            self.t == other.t
            and np.array_equal(self.state, other.state)
            and np.array_equal(self.action, other.action)
        )


@dataclass(eq=False)
class Episode:
    """One teleoperated demonstration: synchronized frames, states and actions.

    Telemetry is stored as dense arrays (``times`` is seconds from episode
    start, strictly increasing). Episodes are immutable after load and safe
    to share across concurrent analysis tasks.
    """

    episode_id: str
    task_id: str
    sample_rate_hz: float
    times: np.ndarray          # (T,)
    states: np.ndarray         # (T, state_dim)
    actions: np.ndarray        # (T, action_dim)
    frames: list[FramePointer] = field(default_factory=list)
    action_bounds: np.ndarray | None = None   # (action_dim, 2) min/max
    gripper_channel: int | None = None
    bounds_inferred: bool = False

    @property
    def duration_s(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def samples(self) -> list[TelemetrySample]:
        return [
            TelemetrySample(float(self.times[i]), self.states[i], self.actions[i])
            for i in range(self.n_samples)
        ]

    def validate(self) -> "Episode":
        if self.sample_rate_hz <= 0:
            raise SchemaError("sample_rate_hz must be positive")
        if self.n_samples == 0:
            raise SchemaError("episode has no samples")
        if self.times.ndim != 1 or self.states.ndim != 2 or self.actions.ndim != 2:
            raise SchemaError("telemetry arrays have wrong rank")
        if len(self.states) != self.n_samples or len(self.actions) != self.n_samples:
            raise SchemaError("sample array lengths disagree")
        if not np.all(np.isfinite(self.states)) or not np.all(np.isfinite(self.actions)):
            raise SchemaError("non-finite state or action values")
        if self.n_samples > 1 and not np.all(np.diff(self.times) > 0):
            bad = int(np.argmax(np.diff(self.times) <= 0)) + 1
            raise SchemaError(f"timestamps not strictly increasing at sample {bad}")
        if self.action_bounds is not None:
            if self.action_bounds.shape != (self.actions.shape[1], 2):
                raise SchemaError("action_bounds shape does not match action dimension")
        if self.gripper_channel is not None and not (
            0 <= self.gripper_channel < self.actions.shape[1]
        ):
            raise SchemaError("gripper_channel out of range")
        dur = self.duration_s
        period = 1.0 / self.sample_rate_hz
        for fp in self.frames:
            if not (-1e-9 <= fp.t <= dur + period + 1e-9):
                raise SchemaError(f"frame timestamp {fp.t} outside episode")
        for a, b in zip(self.frames, self.frames[1:]):
            if b.t < a.t:
                raise SchemaError("frame timestamps decrease")
        return self

    def __eq__(self, other):
        if not isinstance(other, Episode):
            return NotImplemented
        return (
            self.episode_id == other.episode_id
            and self.task_id == other.task_id
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.actions, other.actions)
            and self.frames == other.frames
            and (
                (self.action_bounds is None and other.action_bounds is None)
                or (
                    self.action_bounds is not None
                    and other.action_bounds is not None
                    and np.array_equal(self.action_bounds, other.action_bounds)
                )
            )
            and self.gripper_channel == other.gripper_channel
            and self.bounds_inferred == other.bounds_inferred
        )


@dataclass
class TaskContext:
    """Task description, ordered subtask plan, and captioned expert reference frames."""

    task_id: str
    description: str
    plan: list[str]
    reference_frames: list[tuple[str, str]]   # (uri, caption)
    expert_instructions: str = ""

    def validate(self) -> "TaskContext":
        if not self.plan:
            raise SchemaError("plan must be nonempty")
        if len(set(self.plan)) != len(self.plan):
            raise SchemaError("plan entries must be unique")
        if not self.reference_frames:
            raise SchemaError("reference_frames must be nonempty")
        return self


def load_episode(path: str | Path) -> Episode:
    """Parse a ``.dqaf.jsonl`` file into a validated Episode."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", line_no=1)

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad header: {exc}", line_no=1) from None
    for key in ("episode_id", "task_id", "sample_rate_hz", "dims"):
        if key not in header:
            raise SchemaError(f"header missing '{key}'", line_no=1)
    state_dim = int(header["dims"]["state"])
    action_dim = int(header["dims"]["action"])

    times: list[float] = []
    states: list[list[float]] = []
    actions: list[list[float]] = []
    frames: list[FramePointer] = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad record: {exc}", line_no=i) from None
        if "s" in rec:
            s = rec["s"]
            if len(s["state"]) != state_dim or len(s["action"]) != action_dim:
                raise SchemaError("sample dimension mismatch", line_no=i)
            if times and s["t"] <= times[-1]:
                raise SchemaError("timestamps not strictly increasing", line_no=i)
            times.append(float(s["t"]))
            states.append([float(v) for v in s["state"]])
            actions.append([float(v) for v in s["action"]])
        elif "f" in rec:
            frames.append(FramePointer(float(rec["f"]["t"]), str(rec["f"]["uri"])))
        else:
            raise ParseError("record is neither sample nor frame", line_no=i)
    if not times:
        raise SchemaError("no sample records", line_no=len(lines))

    actions_arr = np.asarray(actions, dtype=float)
    bounds = header.get("action_bounds")
    inferred = False
    if bounds is not None:
        bounds_arr = np.asarray(bounds, dtype=float)
    else:
        # No recorded bounds: fall back to per-dimension observed range.
        bounds_arr = np.stack([actions_arr.min(axis=0), actions_arr.max(axis=0)], axis=1)
        inferred = True

    ep = Episode(
        episode_id=str(header["episode_id"]),
        task_id=str(header["task_id"]),
        sample_rate_hz=float(header["sample_rate_hz"]),
        times=np.asarray(times, dtype=float),
        states=np.asarray(states, dtype=float),
        actions=actions_arr,
        frames=frames,
        action_bounds=bounds_arr,
        gripper_channel=header.get("gripper_channel"),
        bounds_inferred=inferred,
    )
    return ep.validate()


def write_episode(e: Episode, path: str | Path) -> None:
    """Emit the canonical ``.dqaf.jsonl`` serialization (load_episode inverts it)."""
    e.validate()
    header = {
        "episode_id": e.episode_id,
        "task_id": e.task_id,
        "sample_rate_hz": e.sample_rate_hz,
        "dims": {"state": int(e.states.shape[1]), "action": int(e.actions.shape[1])},
        "gripper_channel": e.gripper_channel,
    }
    if e.action_bounds is not None and not e.bounds_inferred:
        header["action_bounds"] = [[float(a), float(b)] for a, b in e.action_bounds]
    out = [_canonical(header)]
    for i in range(e.n_samples):
        out.append(
            _canonical(
                {
                    "s": {
                        "t": float(e.times[i]),
                        "state": [float(v) for v in e.states[i]],
                        "action": [float(v) for v in e.actions[i]],
                    }
                }
            )
        )
    for fp in e.frames:
        out.append(_canonical({"f": {"t": fp.t, "uri": fp.uri}}))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def load_task_context(path: str | Path) -> TaskContext:
    """Parse a ``.task.json`` file; an empty plan or reference set is a SchemaError."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        ctx = TaskContext(
            task_id=str(data["task_id"]),
            description=str(data.get("description", "")),
            plan=[str(p) for p in data["plan"]],
            reference_frames=[(str(u), str(c)) for u, c in data["reference_frames"]],
            expert_instructions=str(data.get("expert_instructions", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad task context: {exc}") from None
    return ctx.validate()


def write_task_context(ctx: TaskContext, path: str | Path) -> None:
    ctx.validate()
    data = {
        "task_id": ctx.task_id,
        "description": ctx.description,
        "plan": ctx.plan,
        "reference_frames": [[u, c] for u, c in ctx.reference_frames],
        "expert_instructions": ctx.expert_instructions,
    }
    Path(path).write_text(_canonical(data) + "\n", encoding="utf-8")
