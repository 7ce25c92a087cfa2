"""
Unit tests for segment-level Beta Thompson Sampling.
"""

import numpy as np
import pytest

from src.policies.thompson import ThompsonSegmentPolicy, beta_posteriors, ts_seg_recommend
from tests.policies.helpers import observation_batch, segment_users, stats_from


class TestBetaPosteriors:
    """Tests for the conjugate update."""

    def test_pessimistic_prior_mean(self):
        alpha, beta = beta_posteriors(stats_from([[0]], [[0]]), (1.0, 99.0))
        assert alpha[0, 0] / (alpha[0, 0] + beta[0, 0]) == pytest.approx(0.01)

    def test_single_success(self):
        alpha, beta = beta_posteriors(stats_from([[1]], [[1]]), (1.0, 99.0))
        assert (alpha[0, 0], beta[0, 0]) == (2.0, 99.0)

    def test_rejects_non_positive_prior(self):
        with pytest.raises(ValueError):
            beta_posteriors(stats_from([[0]], [[0]]), (0.0, 1.0))

    def test_samples_concentrate(self):
        alpha, beta = beta_posteriors(stats_from([[10000]], [[3000]]), (1.0, 1.0))
        samples = np.random.default_rng(6).beta(alpha[0, 0], beta[0, 0], size=10000)
        assert samples.std() < 0.01
        assert abs(samples.mean() - 0.3) < 0.01


class TestThompsonRecommend:
    """Tests for per-user posterior sampling."""

    def test_users_of_a_segment_can_differ(self, rng):
        stats = stats_from([[0] * 6], [[0] * 6])
        slots = ts_seg_recommend(stats, (1.0, 1.0), segment_users([0] * 100), 3, rng)
        assert slots.shape == (100, 3)
        assert len({tuple(row) for row in slots.tolist()}) > 1
        assert all(len(set(row)) == 3 for row in slots.tolist())

    def test_confident_posterior_wins(self, rng):
        """An arm with a clearly higher observed rate leads every carousel."""
        stats = stats_from([[5000, 5000, 5000]], [[2500, 50, 40]])
        slots = ts_seg_recommend(stats, (1.0, 99.0), segment_users([0] * 50), 1, rng)
        assert np.all(slots[:, 0] == 0)

    def test_reproducible(self):
        stats = stats_from([[3, 1, 0, 7]], [[1, 0, 0, 2]])
        users = segment_users([0] * 20)
        first = ts_seg_recommend(stats, (1.0, 1.0), users, 2, np.random.default_rng(2))
        second = ts_seg_recommend(stats, (1.0, 1.0), users, 2, np.random.default_rng(2))
        np.testing.assert_array_equal(first, second)


class TestThompsonSegmentPolicy:
    """Tests for the policy lifecycle."""

    def test_update_counts_only_seen(self):
        policy = ThompsonSegmentPolicy(k=4, l=3, q=1, priors=(1.0, 99.0), name="ts-seg-pessimistic")
        users = segment_users([0])
        policy.update_batch(observation_batch(users, [[2, 0, 1]], [[1, 0, -1]]))
        np.testing.assert_array_equal(policy.stats.displays, [[1, 0, 1, 0]])
        np.testing.assert_array_equal(policy.stats.successes, [[0, 0, 1, 0]])
        assert policy.policy_id == "ts-seg-pessimistic"
