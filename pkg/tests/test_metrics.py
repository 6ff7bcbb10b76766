from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dqaf.errors import (
    AllWeightsZero,
    DimensionMismatch,
    MissingAnchors,
    NoGripperChannel,
    WindowTooShort,
)
from dqaf.metrics import (
    MetricConfig,
    MetricId,
    MetricResult,
    action_saturation,
    aggregate_quality,
    gripper_chatter,
    ldlj,
    nearest_rank_percentile,
    static_fraction,
    static_threshold,
    subscore,
)

from .oracles import (
    naive_chatter,
    naive_ldlj,
    naive_nearest_rank,
    naive_saturation,
    naive_static_fraction,
)

CFG = MetricConfig()


class TestSaturation:
    def test_fully_pinned_dim(self):
        actions = np.full((10, 1), 5.0)
        bounds = np.array([[-5.0, 5.0]])
        assert action_saturation(actions, bounds, CFG) == 1.0

    def test_mid_range_is_zero(self):
        actions = np.zeros((20, 3))
        bounds = np.array([[-1.0, 1.0]] * 3)
        assert action_saturation(actions, bounds, CFG) == 0.0

    def test_partial_saturation_two_dims(self):
        # dim 0 saturated 4/10 steps, dim 1 never -> (0.4 + 0) / 2
        actions = np.zeros((10, 2))
        actions[:4, 0] = 1.0
        bounds = np.array([[-1.0, 1.0], [-1.0, 1.0]])
        assert action_saturation(actions, bounds, CFG) == pytest.approx(0.2)

    def test_degenerate_dims_excluded(self):
        actions = np.zeros((10, 2))
        actions[:, 1] = 3.0   # constant, degenerate bounds
        bounds = np.array([[-1.0, 1.0], [3.0, 3.0]])
        assert action_saturation(actions, bounds, CFG) == 0.0

    def test_all_degenerate_returns_zero(self):
        actions = np.zeros((5, 1))
        bounds = np.array([[0.0, 0.0]])
        assert action_saturation(actions, bounds, CFG) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            action_saturation(np.zeros((5, 2)), np.array([[-1.0, 1.0]]), CFG)

    def test_monotone_in_pinned_steps(self):
        rng = np.random.default_rng(0)
        actions = rng.uniform(-0.5, 0.5, (30, 2))
        bounds = np.array([[-1.0, 1.0]] * 2)
        prev = action_saturation(actions, bounds, CFG)
        for t in range(0, 30, 5):
            actions[t, 0] = 1.0
            cur = action_saturation(actions, bounds, CFG)
            assert cur >= prev
            prev = cur


class TestLdlj:
    def test_cubic_closed_form(self):
        # x(t) = t^3 on [0, 1]: jerk = 6, integral = 36, v_max = 3 -> log 4
        rate = 1000.0
        t = np.arange(0, 1 + 1e-12, 1 / rate)
        assert ldlj(t**3, rate) == pytest.approx(math.log(4), abs=0.02)

    def test_constant_velocity_hits_floor(self):
        t = np.linspace(0, 1, 100)
        assert ldlj(2.0 * t, 100.0, floor=-20.0) == -20.0

    def test_zero_motion_hits_floor(self):
        assert ldlj(np.ones(50), 50.0, floor=-20.0) == -20.0

    def test_window_too_short(self):
        with pytest.raises(WindowTooShort):
            ldlj(np.array([0.0, 1.0, 2.0]), 10.0)

    def test_time_rescale_invariance(self):
        # dimensionless: x(alpha t) sampled at alpha-scaled rate matches
        rng = np.random.default_rng(1)
        base = np.cumsum(rng.normal(size=200))
        smooth = np.convolve(base, np.ones(25) / 25, mode="valid")
        v1 = ldlj(smooth, 100.0)
        v2 = ldlj(smooth, 200.0)   # same samples, double rate = half duration
        assert v1 == pytest.approx(v2, abs=0.05)


class TestChatter:
    def test_hand_counted_transitions(self):
        # binarized pattern 0,0,1,1,0 over 5 s -> 2 transitions -> 0.4/s
        actions = np.array([[0.0], [0.0], [1.0], [1.0], [0.0]])
        assert gripper_chatter(actions, 0, 5.0, CFG) == pytest.approx(0.4)

    def test_constant_command_zero(self):
        actions = np.full((10, 2), 0.7)
        assert gripper_chatter(actions, 1, 2.0, CFG) == 0.0

    def test_alternating_every_step(self):
        actions = (np.arange(10) % 2).astype(float)[:, None]
        assert gripper_chatter(actions, 0, 1.0, CFG) == pytest.approx(9.0)

    def test_invalid_channel(self):
        with pytest.raises(NoGripperChannel):
            gripper_chatter(np.zeros((5, 2)), 7, 1.0, CFG)
        with pytest.raises(NoGripperChannel):
            gripper_chatter(np.zeros((5, 2)), None, 1.0, CFG)

    def test_upper_bound(self):
        rng = np.random.default_rng(2)
        actions = rng.uniform(0, 1, (40, 1))
        rate = gripper_chatter(actions, 0, 2.0, CFG)
        assert 0.0 <= rate <= (40 - 1) / 2.0


class TestStaticFraction:
    def test_all_zero_actions(self):
        assert static_fraction(np.zeros((10, 3)), 0.5) == 1.0

    def test_all_above_threshold(self):
        assert static_fraction(np.ones((10, 3)), 0.5) == 0.0

    def test_counted_fraction(self):
        actions = np.ones((100, 1))
        actions[:30] = 0.0
        assert static_fraction(actions, 0.5) == pytest.approx(0.30)

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(3)
        actions = rng.normal(size=(50, 2))
        fr = [static_fraction(actions, th) for th in (0.1, 0.5, 1.0, 2.0)]
        assert fr == sorted(fr)

    def test_adaptive_threshold_from_percentile(self):
        rng = np.random.default_rng(4)
        actions = rng.uniform(1, 2, (100, 1))
        theta = static_threshold(actions, CFG)
        assert theta == naive_nearest_rank(np.abs(actions[:, 0]), CFG.static_percentile)


class TestSubscore:
    CFG_A = MetricConfig(subscore_anchors={MetricId.LDLJ: (2.0, 10.0)})

    def test_anchor_endpoints(self):
        assert subscore(MetricId.LDLJ, 2.0, self.CFG_A) == 1.0
        assert subscore(MetricId.LDLJ, 10.0, self.CFG_A) == 0.0

    def test_midpoint(self):
        assert subscore(MetricId.LDLJ, 6.0, self.CFG_A) == pytest.approx(0.5)

    def test_clamped_outside(self):
        assert subscore(MetricId.LDLJ, -5.0, self.CFG_A) == 1.0
        assert subscore(MetricId.LDLJ, 50.0, self.CFG_A) == 0.0

    def test_missing_anchors(self):
        with pytest.raises(MissingAnchors):
            subscore(MetricId.CHATTER, 1.0, self.CFG_A)


class TestAggregateQuality:
    @staticmethod
    def results(*phis):
        metrics = list(MetricId)
        return [
            MetricResult(metrics[i], 0.0, phi) for i, phi in enumerate(phis)
        ]

    def test_all_ones(self):
        assert aggregate_quality(self.results(1.0, 1.0, 1.0, 1.0), CFG) == 10.0

    def test_all_zero(self):
        assert aggregate_quality(self.results(0.0, 0.0), CFG) == 0.0

    def test_equal_weight_mean(self):
        assert aggregate_quality(self.results(1.0, 0.5), CFG) == pytest.approx(7.5)

    def test_absent_metric_excluded(self):
        rs = self.results(1.0, 0.0)
        rs[1].present = False
        assert aggregate_quality(rs, CFG) == 10.0

    def test_all_weights_zero(self):
        cfg = MetricConfig(weights={m: 0.0 for m in MetricId})
        with pytest.raises(AllWeightsZero):
            aggregate_quality(self.results(1.0), cfg)

    @given(
        phis=st.lists(st.floats(0, 1), min_size=1, max_size=4),
        scale=st.floats(0.01, 100),
    )
    @settings(max_examples=50, deadline=None)
    def test_weight_scaling_invariance(self, phis, scale):
        rs = self.results(*phis)
        scaled = MetricConfig(weights={m: w * scale for m, w in CFG.weights.items()})
        assert aggregate_quality(rs, CFG) == pytest.approx(
            aggregate_quality(rs, scaled)
        )

    @given(phis=st.lists(st.floats(0, 1), min_size=1, max_size=4))
    @settings(max_examples=50, deadline=None)
    def test_range_and_monotonicity(self, phis):
        rs = self.results(*phis)
        q = aggregate_quality(rs, CFG)
        assert 0.0 <= q <= 10.0
        for i in range(len(rs)):
            bumped = self.results(*phis)
            bumped[i].subscore = min(1.0, bumped[i].subscore + 0.1)
            assert aggregate_quality(bumped, CFG) >= q - 1e-12


class TestOracleEquivalence:
    """Each metric matches its loop-based reference on seeded random windows."""

    def test_saturation_matches_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            n, d = int(rng.integers(2, 40)), int(rng.integers(1, 5))
            actions = rng.uniform(-2, 2, (n, d))
            bounds = np.stack([actions.min(0) - rng.uniform(0, 0.5, d),
                               actions.max(0) + rng.uniform(0, 0.5, d)], axis=1)
            got = action_saturation(actions, bounds, CFG)
            want = naive_saturation(
                actions, bounds, CFG.saturation_margin_fraction,
                CFG.degenerate_range_epsilon,
            )
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_ldlj_matches_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            n, d = int(rng.integers(4, 60)), int(rng.integers(1, 4))
            states = rng.normal(size=(n, d))
            rate = float(rng.uniform(10, 100))
            assert ldlj(states, rate) == pytest.approx(
                naive_ldlj(states, rate), rel=1e-9
            )

    def test_chatter_matches_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            n = int(rng.integers(2, 60))
            actions = rng.uniform(0, 1, (n, 2))
            dur = float(rng.uniform(0.5, 10))
            got = gripper_chatter(actions, 1, dur, CFG)
            want = naive_chatter(
                actions, 1, dur, CFG.gripper_binarize_threshold,
                CFG.degenerate_range_epsilon,
            )
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_static_matches_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n, d = int(rng.integers(1, 60)), int(rng.integers(1, 5))
            actions = rng.normal(size=(n, d))
            theta = float(rng.uniform(0, 2))
            assert static_fraction(actions, theta) == pytest.approx(
                naive_static_fraction(actions, theta), rel=1e-9, abs=1e-12
            )


class TestNearestRank:
    def test_matches_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            vals = rng.normal(size=int(rng.integers(1, 200)))
            p = float(rng.uniform(0.1, 100))
            assert nearest_rank_percentile(vals, p) == naive_nearest_rank(vals, p)

    def test_one_to_hundred_p95(self):
        assert nearest_rank_percentile(np.arange(1, 101), 95.0) == 95.0
