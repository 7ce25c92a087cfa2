"""
Epsilon-Greedy Policy

With probability epsilon a user gets a uniform random carousel, otherwise
the top-L arms of their segment by empirical stream rate.
"""

import numpy as np

from src.models import UserBatch
from src.policies.base import (
    SegmentArmStats,
    SegmentPolicy,
    Users,
    check_segments,
    greedy_segment_carousels,
    uniform_carousels,
)


def epsilon_greedy_seg_recommend(stats: SegmentArmStats, users: Users, epsilon: float, l: int,
                                 rng: np.random.Generator) -> np.ndarray:
    """
    Epsilon-greedy carousels with one coin per user.

    The coin decides for the whole carousel; greedy carousels are shared by
    all users of a segment and rank never-displayed arms at 0.

    Args:
        stats: Per-segment display and stream counters
        users: The round's users
        epsilon: Probability of a random carousel, in [0, 1]
        l: Carousel size
        rng: Random stream

    Returns:
        (len(users), l) carousel matrix
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    batch = UserBatch.coerce(users)
    check_segments(batch, stats.q)

    explore = rng.random(len(batch)) < epsilon
    slots = np.empty((len(batch), l), dtype=np.int64)
    random_rows = np.flatnonzero(explore)
    slots[random_rows] = uniform_carousels(len(random_rows), stats.k, l, rng)
    greedy_segment_carousels(stats.means(), batch.segments, np.flatnonzero(~explore), l, rng, slots)
    return slots


class EpsilonGreedyPolicy(SegmentPolicy):
    """``epsilon-greedy-seg-explore`` (0.1) and ``epsilon-greedy-seg-exploit`` (0.01)."""

    def __init__(self, k: int, l: int, q: int = 1, d: int = 1, cascade: bool = True,
                 epsilon: float = 0.1, name: str = "epsilon-greedy-seg"):
        super().__init__(k, l, q, d, cascade)
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
        self.epsilon = epsilon
        self.name = name

    def recommend(self, users: Users, rng: np.random.Generator) -> np.ndarray:
        return epsilon_greedy_seg_recommend(self.stats, users, self.epsilon, self.l, rng)
