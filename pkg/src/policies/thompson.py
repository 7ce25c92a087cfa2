"""
Beta Thompson Sampling Policy

Per segment and arm, a Beta posterior over the stream rate. Every user
presented in a round gets fresh samples, so users of one segment can see
different carousels before the batch update.
"""

from typing import Tuple

import numpy as np

from src.models import UserBatch, select_top_l_batch
from src.policies.base import SCORE_CHUNK, SegmentArmStats, SegmentPolicy, Users, check_segments


def beta_posteriors(stats: SegmentArmStats, priors: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    """(Q, K) alpha and beta parameters: prior plus streams and seen non-streams."""
    alpha0, beta0 = priors
    if alpha0 <= 0 or beta0 <= 0:
        raise ValueError(f"Beta prior parameters must be positive, got {priors}")
    return alpha0 + stats.successes, beta0 + stats.displays - stats.successes


def ts_seg_recommend(stats: SegmentArmStats, priors: Tuple[float, float], users: Users, l: int,
                     rng: np.random.Generator) -> np.ndarray:
    """
    Thompson Sampling carousels with segment-shared Beta posteriors.

    Args:
        stats: Per-segment display and stream counters
        priors: (alpha0, beta0) of the Beta prior
        users: The round's users
        l: Carousel size
        rng: Random stream

    Returns:
        (len(users), l) carousel matrix ranked on one posterior sample per (user, arm)
    """
    batch = UserBatch.coerce(users)
    check_segments(batch, stats.q)
    alpha, beta = beta_posteriors(stats, priors)

    slots = np.empty((len(batch), l), dtype=np.int64)
    for start in range(0, len(batch), SCORE_CHUNK):
        segments = batch.segments[start:start + SCORE_CHUNK]
        scores = rng.beta(alpha[segments], beta[segments])
        slots[start:start + SCORE_CHUNK] = select_top_l_batch(scores, l, rng)
    return slots


class ThompsonSegmentPolicy(SegmentPolicy):
    """``ts-seg-naive`` (Beta(1, 1) prior) and ``ts-seg-pessimistic`` (Beta(1, 99) prior)."""

    def __init__(self, k: int, l: int, q: int = 1, d: int = 1, cascade: bool = True,
                 priors: Tuple[float, float] = (1.0, 1.0), name: str = "ts-seg"):
        super().__init__(k, l, q, d, cascade)
        if min(priors) <= 0:
            raise ValueError(f"Beta prior parameters must be positive, got {priors}")
        self.priors = tuple(float(p) for p in priors)
        self.name = name

    def recommend(self, users: Users, rng: np.random.Generator) -> np.ndarray:
        return ts_seg_recommend(self.stats, self.priors, users, self.l, rng)
