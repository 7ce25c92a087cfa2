"""
Desk-scale policy comparisons on a synthetic world.

These runs take minutes; they are skipped unless CAROUSEL_BANDIT_SLOW_TESTS=1.
"""

from unittest.mock import patch

import numpy as np
import pytest

from src.policies import create_policy
from src.runner import DatasetSource, ExperimentConfig, run_experiment

SEEDS = [0, 1, 2, 3, 4]

POLICIES = [
    "ts-seg-pessimistic",
    "ts-seg-naive",
    "kl-ucb-seg",
    "ts-lin-naive",
    "ts-lin-pessimistic",
    "ts-seg-pessimistic-no-cascade",
    "epsilon-greedy-seg-explore",
    "epsilon-greedy-seg-explore-no-cascade",
    "etc-seg-exploit",
    "etc-seg-explore",
]


def run_seed(seed):
    """Final regrets, ETC per-round regrets and ETC policies for one seed."""
    policies = {}

    def keep_policy(policy_id, *args, **kwargs):
        policies[policy_id] = create_policy(policy_id, *args, **kwargs)
        return policies[policy_id]

    config = ExperimentConfig(
        policies=POLICIES,
        source=DatasetSource(synthetic={"k": 100, "q": 20, "n": 20000, "d": 11}),
        rounds=100,
        users_per_round=2000,
        seed=seed,
    )
    with patch("src.runner.create_policy", side_effect=keep_policy):
        trajectories = run_experiment(config)
    return {t.policy_id: t for t in trajectories}, policies


@pytest.fixture(scope="module")
def desk_runs():
    return [run_seed(seed) for seed in SEEDS]


def wins(desk_runs, better, worse):
    return sum(runs[better].final < runs[worse].final for runs, _ in desk_runs)


@pytest.mark.slow
class TestDeskScale:
    """Orderings of the segment, linear and baseline policies over five seeds."""

    @pytest.mark.parametrize("rival", ["ts-seg-naive", "kl-ucb-seg", "ts-lin-naive", "ts-lin-pessimistic"])
    def test_pessimistic_thompson_leads(self, desk_runs, rival):
        assert wins(desk_runs, "ts-seg-pessimistic", rival) >= 4

    @pytest.mark.parametrize("policy_id", ["ts-seg-pessimistic", "epsilon-greedy-seg-explore"])
    def test_cascade_beats_no_cascade(self, desk_runs, policy_id):
        assert wins(desk_runs, policy_id, f"{policy_id}-no-cascade") >= 4

    def test_explore_then_commit_flattens(self, desk_runs):
        for runs, policies in desk_runs:
            committed = policies["etc-seg-exploit"].all_committed_round
            assert committed > 1
            per_round = np.asarray(runs["etc-seg-exploit"].per_round)
            exploring = per_round[:min(policies["etc-seg-exploit"].commit_rounds.values()) - 1]
            exploiting = per_round[committed - 1:]
            assert exploiting.mean() < 0.25 * exploring.mean()

    def test_smaller_threshold_commits_first(self, desk_runs):
        for _, policies in desk_runs:
            explore_round = policies["etc-seg-explore"].all_committed_round or np.inf
            assert policies["etc-seg-exploit"].all_committed_round < explore_round
