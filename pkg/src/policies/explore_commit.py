"""
Explore-Then-Commit Policy

Each segment recommends uniform random carousels until every arm has been
seen n times in that segment, then recommends its top-L arms by empirical
stream rate for good.
"""

from typing import Dict

import numpy as np

from src.logger import get_logger
from src.models import ObservationBatch, UserBatch
from src.policies.base import (
    SegmentArmStats,
    SegmentPolicy,
    Users,
    check_segments,
    greedy_segment_carousels,
    uniform_carousels,
)

logger = get_logger("policies.etc")


def committed_segments(stats: SegmentArmStats, n: int) -> np.ndarray:
    """Boolean mask over segments whose every arm has at least n seen displays."""
    return stats.displays.min(axis=1) >= n


def etc_seg_recommend(stats: SegmentArmStats, users: Users, n: int, l: int,
                      rng: np.random.Generator) -> np.ndarray:
    """
    Explore-then-commit carousels, decided per segment.

    Users of a segment still exploring get uniform random carousels; users of
    a committed segment all get that segment's top-l arms by empirical mean.

    Args:
        stats: Per-segment display and stream counters
        users: The round's users
        n: Seen displays every arm needs before the segment commits
        l: Carousel size
        rng: Random stream

    Returns:
        (len(users), l) carousel matrix
    """
    if n < 1:
        raise ValueError(f"commit threshold must be at least 1, got {n}")
    batch = UserBatch.coerce(users)
    check_segments(batch, stats.q)

    committed = committed_segments(stats, n)[batch.segments]
    slots = np.empty((len(batch), l), dtype=np.int64)
    exploring = np.flatnonzero(~committed)
    slots[exploring] = uniform_carousels(len(exploring), stats.k, l, rng)
    greedy_segment_carousels(stats.means(), batch.segments, np.flatnonzero(committed), l, rng, slots)
    return slots


class ExploreThenCommitPolicy(SegmentPolicy):
    """
    ``etc-seg-explore`` (n=100) and ``etc-seg-exploit`` (n=20).

    ``commit_rounds`` maps each committed segment to the first round in which
    it recommended its top-L arms.
    """

    def __init__(self, k: int, l: int, q: int = 1, d: int = 1, cascade: bool = True,
                 threshold: int = 100, name: str = "etc-seg"):
        super().__init__(k, l, q, d, cascade)
        if threshold < 1:
            raise ValueError(f"commit threshold must be at least 1, got {threshold}")
        self.threshold = threshold
        self.name = name
        self.commit_rounds: Dict[int, int] = {}

    def recommend(self, users: Users, rng: np.random.Generator) -> np.ndarray:
        return etc_seg_recommend(self.stats, users, self.threshold, self.l, rng)

    def _update(self, batch: ObservationBatch) -> None:
        super()._update(batch)
        next_round = self.current_round + 1
        for segment in np.flatnonzero(committed_segments(self.stats, self.threshold)):
            if int(segment) not in self.commit_rounds:
                self.commit_rounds[int(segment)] = next_round
                logger.debug(f"{self.policy_id}: segment {segment} commits from round {next_round}")

    @property
    def all_committed_round(self) -> int:
        """Round from which every segment exploits, or 0 if some segment still explores."""
        if len(self.commit_rounds) < self.q:
            return 0
        return max(self.commit_rounds.values())
