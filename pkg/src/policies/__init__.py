"""
Policies Package

This package contains the sequential decision policies compared by the
simulator. Each family has its own module; the registry below maps the
public policy identifiers to factories. Any identifier may carry the
``-no-cascade`` suffix to score every recommended slot as seen.
"""

from typing import Callable, Dict, List, Optional

from src.config import get_policy_settings
from src.policies.base import Policy, SegmentArmStats, SegmentPolicy
from src.policies.epsilon_greedy import EpsilonGreedyPolicy, epsilon_greedy_seg_recommend
from src.policies.explore_commit import ExploreThenCommitPolicy, etc_seg_recommend
from src.policies.kl_ucb import KLUCBSegmentPolicy, kl_bernoulli, kl_ucb_index, kl_ucb_indices
from src.policies.linear_thompson import (
    LinearArmPosterior,
    LinearThompsonPolicy,
    ts_lin_sample_scores,
    ts_lin_update,
)
from src.policies.thompson import ThompsonSegmentPolicy, ts_seg_recommend
from src.policies.uniform import RandomPolicy, random_policy_recommend

NO_CASCADE_SUFFIX = "-no-cascade"

PolicyFactory = Callable[[int, int, int, int, bool, Dict], Policy]


class UnknownPolicyError(ValueError):
    """Raised for a policy identifier missing from POLICY_FACTORIES."""

    def __init__(self, policy_id: str):
        super().__init__(f"Unknown policy: {policy_id} (known: {', '.join(available_policies())})")
        self.policy_id = policy_id


# Dictionary mapping policy identifiers to their constructors
POLICY_FACTORIES: Dict[str, PolicyFactory] = {
    "random": lambda k, l, q, d, cascade, s: RandomPolicy(k, l, q, d, cascade),
    "etc-seg-explore": lambda k, l, q, d, cascade, s: ExploreThenCommitPolicy(
        k, l, q, d, cascade, threshold=s["etc_explore_threshold"], name="etc-seg-explore"),
    "etc-seg-exploit": lambda k, l, q, d, cascade, s: ExploreThenCommitPolicy(
        k, l, q, d, cascade, threshold=s["etc_exploit_threshold"], name="etc-seg-exploit"),
    "epsilon-greedy-seg-explore": lambda k, l, q, d, cascade, s: EpsilonGreedyPolicy(
        k, l, q, d, cascade, epsilon=s["epsilon_explore"], name="epsilon-greedy-seg-explore"),
    "epsilon-greedy-seg-exploit": lambda k, l, q, d, cascade, s: EpsilonGreedyPolicy(
        k, l, q, d, cascade, epsilon=s["epsilon_exploit"], name="epsilon-greedy-seg-exploit"),
    "kl-ucb-seg": lambda k, l, q, d, cascade, s: KLUCBSegmentPolicy(
        k, l, q, d, cascade, tol=s["kl_ucb_tol"]),
    "ts-seg-naive": lambda k, l, q, d, cascade, s: ThompsonSegmentPolicy(
        k, l, q, d, cascade, priors=s["beta_prior_naive"], name="ts-seg-naive"),
    "ts-seg-pessimistic": lambda k, l, q, d, cascade, s: ThompsonSegmentPolicy(
        k, l, q, d, cascade, priors=s["beta_prior_pessimistic"], name="ts-seg-pessimistic"),
    "ts-lin-naive": lambda k, l, q, d, cascade, s: LinearThompsonPolicy(
        k, l, q, d, cascade, bias_mean=s["lin_prior_bias_naive"],
        precision=s["lin_prior_precision"], name="ts-lin-naive"),
    "ts-lin-pessimistic": lambda k, l, q, d, cascade, s: LinearThompsonPolicy(
        k, l, q, d, cascade, bias_mean=s["lin_prior_bias_pessimistic"],
        precision=s["lin_prior_precision"], name="ts-lin-pessimistic"),
}


def available_policies() -> List[str]:
    """Base identifiers, without the no-cascade variants."""
    return list(POLICY_FACTORIES)


def parse_policy_id(policy_id: str) -> tuple:
    """
    Split an identifier into (base identifier, cascade flag).

    Raises:
        UnknownPolicyError: If the base identifier is not registered
    """
    base, cascade = policy_id, True
    if policy_id.endswith(NO_CASCADE_SUFFIX):
        base, cascade = policy_id[:-len(NO_CASCADE_SUFFIX)], False
    if base not in POLICY_FACTORIES:
        raise UnknownPolicyError(policy_id)
    return base, cascade


def create_policy(policy_id: str, k: int, l: int, q: int, d: int,
                  settings: Optional[Dict] = None) -> Policy:
    """
    Build a fresh policy from its identifier.

    Args:
        policy_id: Registered identifier, optionally suffixed with -no-cascade
        k: Catalog size
        l: Carousel size
        q: Segment count
        d: Feature dimension
        settings: Overrides of POLICY_SETTINGS

    Returns:
        The policy, with no feedback applied yet
    """
    base, cascade = parse_policy_id(policy_id)
    merged = {**get_policy_settings(), **(settings or {})}
    return POLICY_FACTORIES[base](k, l, q, d, cascade, merged)


__all__ = [
    'Policy',
    'SegmentPolicy',
    'SegmentArmStats',
    'RandomPolicy',
    'ExploreThenCommitPolicy',
    'EpsilonGreedyPolicy',
    'KLUCBSegmentPolicy',
    'ThompsonSegmentPolicy',
    'LinearThompsonPolicy',
    'LinearArmPosterior',
    'random_policy_recommend',
    'etc_seg_recommend',
    'epsilon_greedy_seg_recommend',
    'kl_bernoulli',
    'kl_ucb_index',
    'kl_ucb_indices',
    'ts_seg_recommend',
    'ts_lin_sample_scores',
    'ts_lin_update',
    'POLICY_FACTORIES',
    'UnknownPolicyError',
    'available_policies',
    'parse_policy_id',
    'create_policy',
]
