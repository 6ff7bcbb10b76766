from __future__ import annotations

import numpy as np
import pytest

from dqaf.episode import Episode, FramePointer, TaskContext


@pytest.fixture
def small_episode() -> Episode:
    times = np.array([0.0, 0.1, 0.2, 0.3, 0.4])
    states = np.stack([np.sin(times), np.cos(times)], axis=1)
    actions = np.stack([times, -times], axis=1)
    return Episode(
        episode_id="ep-small",
        task_id="task-a",
        sample_rate_hz=10.0,
        times=times,
        states=states,
        actions=actions,
        frames=[FramePointer(0.0, "frame:0"), FramePointer(0.2, "frame:1")],
        action_bounds=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
        gripper_channel=None,
    ).validate()


@pytest.fixture
def task_context() -> TaskContext:
    return TaskContext(
        task_id="task-a",
        description="toy task",
        plan=["reach", "grasp", "place", "retract"],
        reference_frames=[("ref:0", "start"), ("ref:1", "end")],
        expert_instructions="be smooth",
    ).validate()


def random_episode(seed: int, n: int = 50, d_state: int = 3, d_action: int = 3,
                   gripper: bool = False) -> Episode:
    """Small random-but-valid episode for round-trip and property tests."""
    rng = np.random.default_rng(seed)
    rate = float(rng.choice([10.0, 20.0, 50.0]))
    times = np.arange(n) / rate
    d_action_total = d_action + (1 if gripper else 0)
    actions = rng.normal(size=(n, d_action_total))
    ep = Episode(
        episode_id=f"rand-{seed}",
        task_id="task-rand",
        sample_rate_hz=rate,
        times=times,
        states=rng.normal(size=(n, d_state)),
        actions=actions,
        frames=[FramePointer(float(t), f"frame:{i}") for i, t in
                enumerate(times[:: max(1, n // 5)])],
        action_bounds=np.stack(
            [actions.min(axis=0) - 0.5, actions.max(axis=0) + 0.5], axis=1
        ),
        gripper_channel=d_action if gripper else None,
    )
    return ep.validate()
