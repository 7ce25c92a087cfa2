"""
Base Policy Module

This module provides what every policy shares: the recommend/update
contract, per-segment display and stream counters, observation masking
according to the policy's cascade mode, and helpers to build carousels for
a batch of users.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple, Union

import numpy as np

from src.environment import observe_cascade_batch, observe_no_cascade_batch
from src.logger import get_logger
from src.models import ObservationBatch, RoundObservation, UserBatch, UserProfile, select_top_l

# Initialize logger
logger = get_logger("policies")

# Rows scored at once by policies that sample one score per (user, arm)
SCORE_CHUNK = 4096

Users = Union[UserBatch, Sequence[UserProfile]]
Observations = Union[ObservationBatch, Sequence[RoundObservation]]


def as_observation_batch(observations: Observations) -> ObservationBatch:
    if isinstance(observations, ObservationBatch):
        return observations
    return ObservationBatch.from_observations(list(observations))


@dataclass
class SegmentArmStats:
    """Per-segment counters of seen displays and streams, shape (Q, K)."""

    displays: np.ndarray
    successes: np.ndarray

    @classmethod
    def zeros(cls, q: int, k: int) -> 'SegmentArmStats':
        return cls(np.zeros((q, k), dtype=np.int64), np.zeros((q, k), dtype=np.int64))

    @property
    def q(self) -> int:
        return int(self.displays.shape[0])

    @property
    def k(self) -> int:
        return int(self.displays.shape[1])

    def update(self, batch: ObservationBatch) -> None:
        """
        Count seen slots as displays and streamed slots as successes.

        Unseen slots leave the counters untouched.
        """
        segments = np.broadcast_to(batch.users.segments[:, None], batch.slots.shape)
        np.add.at(self.displays, (segments, batch.slots), batch.seen.astype(np.int64))
        np.add.at(self.successes, (segments, batch.slots), batch.streamed.astype(np.int64))

    def means(self) -> np.ndarray:
        """Empirical stream rates; arms never displayed in a segment score 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.displays > 0, self.successes / np.maximum(self.displays, 1), 0.0)


def segment_groups(segments: np.ndarray) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (segment, row positions) for every segment present, in ascending segment order."""
    segments = np.asarray(segments)
    order = np.argsort(segments, kind="stable")
    values, starts = np.unique(segments[order], return_index=True)
    bounds = list(starts[1:]) + [len(order)]
    for segment, start, stop in zip(values, starts, bounds):
        yield int(segment), order[start:stop]


def uniform_carousels(n: int, k: int, l: int, rng: np.random.Generator) -> np.ndarray:
    """
    n carousels of l distinct arms, each an ordered sample uniform without replacement.

    The l arms with the smallest uniform keys are kept in key order, which
    makes every ordered l-subset equally likely.
    """
    if l > k:
        raise ValueError(f"cannot fill {l} slots from {k} arms")
    if n == 0:
        return np.empty((0, l), dtype=np.int64)
    keys = rng.random((n, k))
    part = np.argpartition(keys, l - 1, axis=1)[:, :l]
    order = np.argsort(np.take_along_axis(keys, part, axis=1), axis=1)
    return np.take_along_axis(part, order, axis=1)


def greedy_segment_carousels(scores: np.ndarray, segments: np.ndarray, rows: np.ndarray, l: int,
                             rng: np.random.Generator, out: np.ndarray) -> None:
    """
    Fill out[rows] with one top-l carousel per segment.

    Every user of a segment gets the same carousel, ranked on that segment's
    row of ``scores`` with random tie-breaking.
    """
    if len(rows) == 0:
        return
    for segment, members in segment_groups(segments[rows]):
        out[rows[members]] = select_top_l(scores[segment], l, rng).slots


class Policy(ABC):
    """
    Contract shared by all policies.

    recommend() scores users at the start of a round and never changes the
    policy's state; update_batch() applies the whole round's feedback once,
    at the end of the round.
    """

    name = "policy"

    def __init__(self, k: int, l: int, q: int = 1, d: int = 1, cascade: bool = True):
        if l > k:
            raise ValueError(f"carousel size {l} exceeds catalog size {k}")
        self.k = k
        self.l = l
        self.q = q
        self.d = d
        self.cascade = cascade
        self.rounds_completed = 0

    @property
    def policy_id(self) -> str:
        return self.name if self.cascade else f"{self.name}-no-cascade"

    @property
    def current_round(self) -> int:
        """1-based index of the round being played."""
        return self.rounds_completed + 1

    def observe(self, streamed: np.ndarray, l_init: int) -> np.ndarray:
        """Reward codes this policy learns from a round's streams."""
        if self.cascade:
            return observe_cascade_batch(streamed, l_init)
        return observe_no_cascade_batch(streamed)

    @abstractmethod
    def recommend(self, users: Users, rng: np.random.Generator) -> np.ndarray:
        """
        Carousels for a batch of users.

        Args:
            users: The round's users
            rng: Random stream reserved for this policy and round

        Returns:
            (n, L) integer matrix, row i being user i's carousel
        """

    def update_batch(self, observations: Observations) -> None:
        """Apply one round of delayed feedback."""
        if len(observations):
            self._update(as_observation_batch(observations))
        self.rounds_completed += 1

    @abstractmethod
    def _update(self, batch: ObservationBatch) -> None:
        pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}(policy_id={self.policy_id!r}, k={self.k}, l={self.l}, q={self.q})"


class SegmentPolicy(Policy):
    """Policies whose parameters are shared by all users of a segment."""

    def __init__(self, k: int, l: int, q: int = 1, d: int = 1, cascade: bool = True):
        super().__init__(k, l, q, d, cascade)
        self.stats = SegmentArmStats.zeros(q, k)

    def _update(self, batch: ObservationBatch) -> None:
        self.stats.update(batch)


def check_segments(users: UserBatch, q: int) -> None:
    if len(users) and users.segments.max() >= q:
        raise ValueError(f"segment {int(users.segments.max())} is outside [0, {q})")

