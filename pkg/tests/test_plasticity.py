"""Trace dynamics, the two STDP updates, and weight normalization."""

import math

import numpy as np
import pytest

from lmsnn.config import StdpParams
from lmsnn.plasticity import decay_traces, normalize_input_weights, stdp_on_post, stdp_on_pre

P = StdpParams()


class TestTraces:
    def test_decay_over_one_time_constant(self):
        x_pre, x_post = decay_traces(np.array([1.0]), np.array([1.0]), P.tau_pre, P)
        assert abs(x_pre[0] - math.exp(-1.0)) < 1e-9
        assert abs(x_post[0] - math.exp(-1.0)) < 1e-9

    def test_zero_is_fixed_point(self):
        x_pre, x_post = decay_traces(np.zeros(3), np.zeros(2), 0.5, P)
        assert not x_pre.any() and not x_post.any()

    def test_spike_saturates_to_one(self):
        """Back-to-back spikes set the trace to exactly 1, never above."""
        x_pre = np.zeros(1)
        x_post = np.zeros(1)
        for _ in range(2):
            x_pre, x_post = decay_traces(
                x_pre, x_post, 0.5, P, pre_spikes=np.array([True]), post_spikes=np.array([True])
            )
        assert x_pre[0] == 1.0 and x_post[0] == 1.0

    def test_inputs_not_mutated(self):
        x_pre = np.full(4, 0.7)
        x_post = np.full(4, 0.7)
        decay_traces(x_pre, x_post, 0.5, P, pre_spikes=np.array([True, False, False, False]))
        assert np.all(x_pre == 0.7) and np.all(x_post == 0.7)

    def test_traces_stay_in_unit_interval(self, rng):
        x_pre = rng.random(16)
        x_post = rng.random(16)
        for _ in range(200):
            x_pre, x_post = decay_traces(
                x_pre, x_post, 0.5, P, pre_spikes=rng.random(16) < 0.2, post_spikes=rng.random(16) < 0.2
            )
        assert np.all((0.0 <= x_pre) & (x_pre <= 1.0))
        assert np.all((0.0 <= x_post) & (x_post <= 1.0))


class TestStdpOnPost:
    def test_zero_trace_no_change(self):
        assert np.all(stdp_on_post(np.array([0.3, 0.9]), np.zeros(2), P) == 0.0)

    def test_soft_bound_vanishes_at_w_max(self):
        assert np.all(stdp_on_post(np.array([P.w_max]), np.ones(1), P) == 0.0)

    def test_hand_value(self):
        dw = stdp_on_post(np.array([0.0]), np.array([0.5]), P)
        assert abs(dw[0] - 0.005) < 1e-15

    def test_never_exceeds_w_max(self, rng):
        for _ in range(500):
            w = rng.random(32)
            dw = stdp_on_post(w, rng.random(32), P)
            assert np.all(dw >= 0.0)
            assert np.all(w + dw <= P.w_max + 1e-15)


class TestStdpOnPre:
    def test_zero_trace_no_change(self):
        assert np.all(stdp_on_pre(np.array([0.3, 0.9]), np.zeros(2), P) == 0.0)

    def test_floor_at_zero_weight(self):
        assert np.all(stdp_on_pre(np.zeros(2), np.ones(2), P) == 0.0)

    def test_hand_value(self):
        # returned as a floor-then-difference, so allow round-trip rounding
        dw = stdp_on_pre(np.array([0.5]), np.array([1.0]), P)
        assert abs(dw[0] - (-5e-5)) < 1e-16

    def test_never_goes_negative(self, rng):
        for _ in range(500):
            w = rng.random(32)
            dw = stdp_on_pre(w, rng.random(32), P)
            assert np.all(dw <= 0.0)
            assert np.all(w + dw >= 0.0)


class TestNormalization:
    def test_double_sum_halves(self):
        w = np.full((4, 1), 2 * P.norm_sum / 4)
        assert normalize_input_weights(w, P.norm_sum) == 0
        np.testing.assert_allclose(w[:, 0], P.norm_sum / 4)

    def test_idempotent_at_target(self):
        w = np.full((7, 2), P.norm_sum / 7)
        before = w.copy()
        normalize_input_weights(w, P.norm_sum)
        np.testing.assert_allclose(w, before, atol=1e-12)

    def test_masked_column_rescales_survivors_only(self, rng):
        """Zero (masked) entries stay zero; survivors carry the whole sum."""
        w = rng.random((100, 3))
        mask = rng.random((100, 3)) < 0.9  # ~90% masked away
        w[mask] = 0.0
        normalize_input_weights(w, P.norm_sum)
        np.testing.assert_allclose(w.sum(axis=0), P.norm_sum, atol=1e-9)
        assert np.all(w[mask] == 0.0)

    def test_zero_column_skipped_and_counted(self):
        w = np.zeros((5, 3))
        w[:, 1] = 1.0
        skipped = normalize_input_weights(w, P.norm_sum)
        assert skipped == 2
        assert np.all(w[:, 0] == 0.0) and np.all(w[:, 2] == 0.0)
        np.testing.assert_allclose(w[:, 1].sum(), P.norm_sum)

    def test_conservation_fuzz(self, rng):
        """Column sums land on norm_sum to 1e-9 over random matrices."""
        for _ in range(100):
            rows = int(rng.integers(10, 800))
            cols = int(rng.integers(1, 12))
            w = rng.random((rows, cols)) * rng.uniform(0.1, 3.0)
            normalize_input_weights(w, P.norm_sum)
            np.testing.assert_allclose(w.sum(axis=0), P.norm_sum, atol=1e-9)
            assert np.all(w >= 0.0)
