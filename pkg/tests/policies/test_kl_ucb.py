"""
Unit tests for the KL-UCB index and policy.
"""

import numpy as np
import pytest
from scipy.special import xlogy

from src.policies.kl_ucb import KLUCBSegmentPolicy, kl_bernoulli, kl_ucb_index, kl_ucb_indices
from tests.policies.helpers import observation_batch, segment_users


def kl_direct(p, q):
    total = 0.0
    if p > 0:
        total += p * np.log(p / q)
    if p < 1:
        total += (1 - p) * np.log((1 - p) / (1 - q))
    return total


class TestKlBernoulli:
    """Tests for the Bernoulli divergence."""

    def test_identity(self):
        assert kl_bernoulli(0.5, 0.5) == 0.0

    def test_zero_mean_branch(self):
        assert abs(kl_bernoulli(0.0, 0.5) - np.log(2)) < 1e-12

    def test_asymmetry(self):
        forward, backward = kl_bernoulli(0.3, 0.7), kl_bernoulli(0.7, 0.3)
        assert forward > 0 and backward > 0
        assert abs(forward - kl_direct(0.3, 0.7)) < 1e-12
        assert abs(backward - kl_direct(0.7, 0.3)) < 1e-12
        assert abs(kl_bernoulli(0.1, 0.4) - kl_bernoulli(0.4, 0.1)) > 1e-3

    @pytest.mark.parametrize("p,q", [(-0.1, 0.5), (0.5, 0.0), (0.5, 1.0)])
    def test_domain(self, p, q):
        with pytest.raises(ValueError):
            kl_bernoulli(p, q)


class TestKlUcbIndex:
    """Tests for the bisection index."""

    def test_untried_arm(self):
        assert kl_ucb_index(0, 0, 10) == 1.0

    def test_perfect_arm(self):
        assert kl_ucb_index(7, 7, 10) == 1.0

    def test_first_round_has_no_bonus(self):
        assert kl_ucb_index(3, 10, 1) == pytest.approx(0.3, abs=1e-6)

    def test_worked_example(self):
        """10 streams out of 100 displays at t=100."""
        q_star = kl_ucb_index(10, 100, 100, tol=1e-12)
        assert abs(100 * kl_direct(0.1, q_star) - np.log(100)) < 1e-6

        grid = np.arange(0.1, 0.5, 1e-7)
        with np.errstate(divide="ignore", invalid="ignore"):
            feasible = grid[100 * (0.1 * np.log(0.1 / grid) + 0.9 * np.log(0.9 / (1 - grid))) <= np.log(100)]
        assert abs(kl_ucb_index(10, 100, 100) - feasible.max()) < 2e-6

    def test_random_triples(self):
        """With default settings the index solves d * KL(p_hat, q) = log t whenever it stays below 1."""
        rng = np.random.default_rng(17)
        displays = rng.integers(1, 10_000, size=2000)
        successes = rng.integers(0, displays + 1)
        # half the arms sit just below a perfect record
        near_perfect = rng.random(2000) < 0.5
        successes = np.where(near_perfect, np.maximum(displays - rng.integers(1, 4, size=2000), 0), successes)
        t = rng.integers(1, 100_000, size=2000)
        checked = 0
        for s, d, round_index in zip(successes, displays, t):
            q_star = kl_ucb_index(int(s), int(d), int(round_index))
            if q_star < 1.0:
                assert abs(d * kl_direct(s / d, q_star) - np.log(round_index)) <= 1e-5, (s, d, round_index)
                checked += 1
        assert checked > 1500

    @pytest.mark.parametrize("s,d,t", [
        (1730, 1731, 43828),
        (9990, 9999, 99_999),
        (0, 5000, 10_000),
        (1, 1, 7),
        (10, 100, 100),
    ])
    def test_steep_and_flat_cases(self, s, d, t):
        """The default bisection meets the slack bound and the 1e-7 grid search."""
        q_star = kl_ucb_index(s, d, t)
        p_hat = s / d
        if p_hat == 1.0:
            assert q_star == 1.0
            return
        assert q_star < 1.0
        assert abs(d * kl_direct(p_hat, q_star) - np.log(t)) <= 1e-5

        grid = p_hat + 1e-7 * np.arange(int((min(q_star + 1e-5, 1.0) - p_hat) / 1e-7))
        grid = grid[grid < 1.0]
        with np.errstate(divide="ignore", invalid="ignore"):
            divergence = xlogy(p_hat, p_hat / grid) + xlogy(1 - p_hat, (1 - p_hat) / (1 - grid))
        best_on_grid = grid[d * divergence <= np.log(t)].max()
        assert abs(q_star - best_on_grid) <= 1.2e-6

    def test_non_increasing_in_displays(self):
        """Scaling s and d together keeps p_hat and lowers the index."""
        for s, d, t in [(3, 10, 50), (1, 4, 1000), (0, 6, 20), (17, 20, 99_999)]:
            values = [kl_ucb_index(k * s, k * d, t) for k in range(1, 11)]
            assert all(later <= earlier for earlier, later in zip(values, values[1:])), values
            assert values[-1] >= s / d

    def test_vectorised_matches_scalar(self):
        successes = np.array([[0, 3, 5], [2, 0, 9]])
        displays = np.array([[0, 10, 5], [4, 7, 30]])
        indices = kl_ucb_indices(successes, displays, 50)
        for row in range(2):
            for col in range(3):
                assert indices[row, col] == pytest.approx(
                    kl_ucb_index(successes[row, col], displays[row, col], 50), abs=2e-6)

    def test_index_is_above_mean(self):
        indices = kl_ucb_indices(np.array([1, 5, 20]), np.array([10, 10, 40]), 20)
        assert np.all(indices >= np.array([0.1, 0.5, 0.5]))

    def test_rejects_bad_counts(self):
        with pytest.raises(ValueError):
            kl_ucb_indices(np.array([5]), np.array([3]), 2)
        with pytest.raises(ValueError):
            kl_ucb_index(1, 3, 0)


class TestKlUcbPolicy:
    """Tests for the segment-level policy."""

    def test_untried_arms_first(self, rng):
        policy = KLUCBSegmentPolicy(k=4, l=2, q=1)
        users = segment_users([0, 0])
        policy.update_batch(observation_batch(users, [[0, 1], [0, 1]], [[1, 0], [0, 0]]))
        slots = policy.recommend(segment_users([0] * 3), rng)
        for row in slots.tolist():
            assert set(row) == {2, 3}

    def test_same_carousel_within_segment(self, rng):
        policy = KLUCBSegmentPolicy(k=6, l=3, q=2)
        users = segment_users([0, 1])
        policy.update_batch(observation_batch(users, [[0, 1, 2], [3, 4, 5]], [[1, 0, 0], [0, 0, 1]]))
        policy.update_batch(observation_batch(users, [[3, 4, 5], [0, 1, 2]], [[0, 1, 0], [1, 0, 0]]))
        slots = policy.recommend(segment_users([0, 0, 0, 1, 1]), rng)
        assert len({tuple(row) for row in slots[:3].tolist()}) == 1
        assert len({tuple(row) for row in slots[3:].tolist()}) == 1
        assert policy.current_round == 3
