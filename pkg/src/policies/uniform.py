"""
Uniform Random Policy

Baseline that fills every carousel with L distinct arms drawn uniformly at
random, independently of any feedback.
"""

import numpy as np

from src.models import ObservationBatch, UserBatch
from src.policies.base import Policy, Users, uniform_carousels


def random_policy_recommend(users: Users, k: int, l: int, rng: np.random.Generator) -> np.ndarray:
    """
    Uniform random carousels.

    Args:
        users: The round's users (only their count matters)
        k: Catalog size
        l: Carousel size
        rng: Random stream

    Returns:
        (n, l) matrix of ordered samples without replacement
    """
    return uniform_carousels(len(UserBatch.coerce(users)), k, l, rng)


class RandomPolicy(Policy):
    """The ``random`` baseline."""

    name = "random"

    def recommend(self, users: Users, rng: np.random.Generator) -> np.ndarray:
        return random_policy_recommend(users, self.k, self.l, rng)

    def _update(self, batch: ObservationBatch) -> None:
        # Feedback is ignored
        pass
