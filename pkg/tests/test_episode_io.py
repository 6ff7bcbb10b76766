from __future__ import annotations

import numpy as np
import pytest

from dqaf.episode import (
    Episode,
    FramePointer,
    TaskContext,
    load_episode,
    load_task_context,
    write_episode,
    write_task_context,
)
from dqaf.errors import ParseError, SchemaError

from .conftest import random_episode


FIXTURE_3x2 = """\
{"episode_id":"fix","task_id":"t","sample_rate_hz":10.0,"dims":{"state":2,"action":2},"gripper_channel":null,"action_bounds":[[-1,1],[-1,1]]}
{"s":{"t":0.0,"state":[0.0,0.1],"action":[0.5,-0.5]}}
{"s":{"t":0.1,"state":[0.1,0.2],"action":[0.4,-0.4]}}
{"s":{"t":0.2,"state":[0.2,0.3],"action":[0.3,-0.3]}}
{"f":{"t":0.0,"uri":"frame:0"}}
"""


def test_load_fixture(tmp_path):
    path = tmp_path / "fix.dqaf.jsonl"
    path.write_text(FIXTURE_3x2)
    e = load_episode(path)
    assert e.n_samples == 3
    assert e.states.shape == (3, 2)
    assert e.actions.shape == (3, 2)
    assert e.duration_s == pytest.approx(0.2)
    assert not e.bounds_inferred


def test_decreasing_timestamps_name_offending_line(tmp_path):
    bad = FIXTURE_3x2.replace('{"s":{"t":0.2,', '{"s":{"t":0.05,')
    path = tmp_path / "bad.dqaf.jsonl"
    path.write_text(bad)
    with pytest.raises(SchemaError) as exc:
        load_episode(path)
    assert exc.value.line_no == 4


def test_malformed_record_is_parse_error(tmp_path):
    path = tmp_path / "bad.dqaf.jsonl"
    path.write_text(FIXTURE_3x2 + "{not json\n")
    with pytest.raises(ParseError) as exc:
        load_episode(path)
    assert exc.value.line_no == 6


def test_dimension_mismatch(tmp_path):
    bad = FIXTURE_3x2.replace('"action":[0.4,-0.4]', '"action":[0.4]')
    path = tmp_path / "bad.dqaf.jsonl"
    path.write_text(bad)
    with pytest.raises(SchemaError):
        load_episode(path)


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        load_episode(tmp_path / "nope.dqaf.jsonl")


def test_missing_bounds_inferred(tmp_path):
    no_bounds = FIXTURE_3x2.replace(',"action_bounds":[[-1,1],[-1,1]]', "")
    path = tmp_path / "nb.dqaf.jsonl"
    path.write_text(no_bounds)
    e = load_episode(path)
    assert e.bounds_inferred
    assert np.allclose(e.action_bounds[:, 0], e.actions.min(axis=0))
    assert np.allclose(e.action_bounds[:, 1], e.actions.max(axis=0))


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_equality(tmp_path, seed):
    e = random_episode(seed, gripper=(seed % 2 == 0))
    path = tmp_path / "rt.dqaf.jsonl"
    write_episode(e, path)
    assert load_episode(path) == e


@pytest.mark.parametrize("seed", range(5))
def test_reserialization_is_byte_identical(tmp_path, seed):
    e = random_episode(seed)
    p1 = tmp_path / "a.dqaf.jsonl"
    p2 = tmp_path / "b.dqaf.jsonl"
    write_episode(e, p1)
    write_episode(load_episode(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_write_counts(tmp_path):
    e = random_episode(3, n=100, d_action=7)
    e.frames = []
    path = tmp_path / "c.dqaf.jsonl"
    write_episode(e, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 100   # header + samples, zero frame records
    assert sum(1 for ln in lines if '"s"' in ln) == 100


def test_validation_rejects_nonfinite():
    e = random_episode(4)
    e.actions[0, 0] = float("nan")
    with pytest.raises(SchemaError):
        e.validate()


def test_validation_rejects_frame_outside_episode():
    e = random_episode(5)
    e.frames.append(FramePointer(e.duration_s + 5.0, "frame:late"))
    with pytest.raises(SchemaError):
        e.validate()


class TestTaskContext:
    def test_plan_length(self, tmp_path):
        ctx = TaskContext("t2", "handover", ["pick", "present", "receive", "carry"],
                          [("ref:0", "start")])
        path = tmp_path / "t.task.json"
        write_task_context(ctx, path)
        loaded = load_task_context(path)
        assert len(loaded.plan) == 4
        assert loaded == ctx

    def test_empty_references_rejected(self, tmp_path):
        path = tmp_path / "t.task.json"
        path.write_text('{"task_id":"t","plan":["a"],"reference_frames":[]}')
        with pytest.raises(SchemaError):
            load_task_context(path)

    def test_empty_plan_rejected(self, tmp_path):
        path = tmp_path / "t.task.json"
        path.write_text('{"task_id":"t","plan":[],"reference_frames":[["r","c"]]}')
        with pytest.raises(SchemaError):
            load_task_context(path)

    def test_duplicate_plan_rejected(self):
        with pytest.raises(SchemaError):
            TaskContext("t", "", ["a", "a"], [("r", "c")]).validate()

    def test_handover_fixture(self, tmp_path):
        path = tmp_path / "handover.task.json"
        path.write_text(
            '{"task_id":"handover","description":"item handover and drop-off",'
            '"plan":["pick","present","receive","carry","drop"],'
            '"reference_frames":[["ref:0","right arm picks the object"]],'
            '"expert_instructions":"secure transfer, correct deposit"}'
        )
        ctx = load_task_context(path)
        assert len(ctx.plan) == 5
