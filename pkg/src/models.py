"""
Data models for the carousel bandit workbench.

This module contains the value types shared by every component (users, arms,
carousels, observations, simulation settings) and the two numeric
primitives the rest of the code composes: sigmoid scoring and top-L
selection.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

# Largest double below 1 and smallest positive normal double.
_SIGMOID_CEIL = np.nextafter(1.0, 0.0)
_SIGMOID_FLOOR = np.finfo(np.float64).tiny


def _frozen_vector(values: Iterable[float], name: str) -> np.ndarray:
    vector = np.array(values, dtype=np.float64)
    if vector.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {vector.shape}")
    vector.setflags(write=False)
    return vector


@dataclass(frozen=True, eq=False)
class UserProfile:
    """A user's context vector x_u with its segment and identifier."""

    user_id: int
    features: np.ndarray
    segment: int = 0

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen_vector(self.features, "features"))
        if self.segment < 0:
            raise ValueError(f"segment must be non-negative, got {self.segment}")

    @property
    def dimension(self) -> int:
        return int(self.features.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, UserProfile):
            return NotImplemented
        return (self.user_id == other.user_id and self.segment == other.segment
                and np.array_equal(self.features, other.features))

    def __hash__(self) -> int:
        return hash((self.user_id, self.segment))


@dataclass(frozen=True, eq=False)
class ArmParameters:
    """A playlist's ground-truth logistic weight vector theta_i."""

    arm_id: int
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen_vector(self.theta, "theta"))

    @property
    def dimension(self) -> int:
        return int(self.theta.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ArmParameters):
            return NotImplemented
        return self.arm_id == other.arm_id and np.array_equal(self.theta, other.theta)

    def __hash__(self) -> int:
        return hash(self.arm_id)


@dataclass(frozen=True)
class Carousel:
    """Ordered arm indices shown to one user; slot 0 is the leftmost card (rank 1)."""

    slots: Tuple[int, ...]

    def __post_init__(self):
        slots = tuple(int(arm) for arm in self.slots)
        if len(set(slots)) != len(slots):
            raise ValueError(f"carousel slots must be distinct, got {slots}")
        if any(arm < 0 for arm in slots):
            raise ValueError(f"carousel slots must be non-negative, got {slots}")
        object.__setattr__(self, "slots", slots)

    def __len__(self) -> int:
        return len(self.slots)

    def validate(self, k: int, l: int) -> None:
        """
        Check the carousel against a catalog of k arms and l slots.

        Raises:
            ValueError: If the length differs from l or an arm index is >= k
        """
        if len(self.slots) != l:
            raise ValueError(f"carousel has {len(self.slots)} slots, expected {l}")
        if any(arm >= k for arm in self.slots):
            raise ValueError(f"carousel {self.slots} references an arm outside [0, {k})")


class SlotReward(IntEnum):
    """Policy-visible reward of one slot: unseen, seen without stream, or streamed."""

    UNSEEN = -1
    MISS = 0
    STREAM = 1

    @property
    def seen(self) -> bool:
        return self is not SlotReward.UNSEEN


@dataclass(frozen=True, eq=False)
class RoundObservation:
    """What a policy learns about one user's carousel at the end of a round."""

    user_id: int
    carousel: Carousel
    rewards: Tuple[SlotReward, ...]
    segment: int = 0
    features: Optional[np.ndarray] = None

    def __post_init__(self):
        rewards = tuple(SlotReward(int(r)) for r in self.rewards)
        if len(rewards) != len(self.carousel):
            raise ValueError(f"{len(rewards)} rewards for a carousel of {len(self.carousel)} slots")
        object.__setattr__(self, "rewards", rewards)
        if self.features is not None:
            object.__setattr__(self, "features", _frozen_vector(self.features, "features"))

    @property
    def seen_ranks(self) -> List[int]:
        """1-based ranks of the slots marked seen."""
        return [rank for rank, r in enumerate(self.rewards, start=1) if r.seen]


@dataclass(frozen=True)
class SimulationConfig:
    """Sizes and browsing settings of one simulation."""

    k: int
    l: int
    l_init: int
    q: int
    d: int
    n_users_per_round: int
    n_rounds: int
    gamma: float = 0.9
    seed: int = 0
    display_mode: str = "cascade_browse"

    def __post_init__(self):
        for name in ("k", "l", "l_init", "q", "d", "n_users_per_round", "n_rounds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if not self.l_init <= self.l < self.k:
            raise ValueError(f"expected l_init <= l < k, got l_init={self.l_init}, l={self.l}, k={self.k}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.display_mode not in ("cascade_browse", "full_display"):
            raise ValueError(f"unknown display mode: {self.display_mode}")

    def to_dict(self) -> Dict:
        return {
            "k": self.k,
            "l": self.l,
            "l_init": self.l_init,
            "q": self.q,
            "d": self.d,
            "n_users_per_round": self.n_users_per_round,
            "n_rounds": self.n_rounds,
            "gamma": self.gamma,
            "seed": self.seed,
            "display_mode": self.display_mode,
        }


@dataclass(frozen=True, eq=False)
class UserBatch:
    """Array form of a list of users: ids (n,), segments (n,), features (n, D)."""

    user_ids: np.ndarray
    segments: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        features = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        user_ids = np.asarray(self.user_ids, dtype=np.int64).reshape(-1)
        segments = np.asarray(self.segments, dtype=np.int64).reshape(-1)
        if not len(user_ids) == len(segments) == features.shape[0]:
            raise ValueError("user ids, segments and features must have the same length")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "user_ids", user_ids)
        object.__setattr__(self, "segments", segments)

    @classmethod
    def from_profiles(cls, users: Sequence[UserProfile]) -> 'UserBatch':
        if not users:
            raise ValueError("cannot build a batch from zero users")
        return cls(
            user_ids=np.array([u.user_id for u in users]),
            segments=np.array([u.segment for u in users]),
            features=np.vstack([u.features for u in users]),
        )

    @classmethod
    def coerce(cls, users: Union['UserBatch', Sequence[UserProfile]]) -> 'UserBatch':
        return users if isinstance(users, UserBatch) else cls.from_profiles(users)

    def __len__(self) -> int:
        return int(self.user_ids.shape[0])

    def profile(self, index: int) -> UserProfile:
        return UserProfile(int(self.user_ids[index]), self.features[index], int(self.segments[index]))

    def profiles(self) -> List[UserProfile]:
        return [self.profile(i) for i in range(len(self))]


@dataclass(eq=False)
class ObservationBatch:
    """
    Array form of a round's observations.

    ``slots`` is the (n, L) carousel matrix and ``rewards`` the matching
    matrix of SlotReward codes (-1 unseen, 0 seen, 1 streamed).
    """

    users: UserBatch
    slots: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        self.slots = np.asarray(self.slots, dtype=np.int64)
        self.rewards = np.asarray(self.rewards, dtype=np.int8)
        if self.slots.shape != self.rewards.shape:
            raise ValueError(f"slots {self.slots.shape} and rewards {self.rewards.shape} differ in shape")
        if self.slots.shape[0] != len(self.users):
            raise ValueError("one carousel per user is required")

    @classmethod
    def from_observations(cls, observations: Sequence[RoundObservation]) -> 'ObservationBatch':
        if not observations:
            raise ValueError("cannot build a batch from zero observations")
        users = UserBatch(
            user_ids=np.array([o.user_id for o in observations]),
            segments=np.array([o.segment for o in observations]),
            features=np.vstack([
                o.features if o.features is not None else np.zeros(0) for o in observations
            ]),
        )
        return cls(
            users=users,
            slots=np.array([o.carousel.slots for o in observations]),
            rewards=np.array([[int(r) for r in o.rewards] for o in observations]),
        )

    def __len__(self) -> int:
        return int(self.slots.shape[0])

    @property
    def seen(self) -> np.ndarray:
        return self.rewards != SlotReward.UNSEEN

    @property
    def streamed(self) -> np.ndarray:
        return self.rewards == SlotReward.STREAM

    def observation(self, index: int) -> RoundObservation:
        return RoundObservation(
            user_id=int(self.users.user_ids[index]),
            carousel=Carousel(tuple(self.slots[index])),
            rewards=tuple(SlotReward(int(r)) for r in self.rewards[index]),
            segment=int(self.users.segments[index]),
            features=self.users.features[index],
        )

    def observations(self) -> List[RoundObservation]:
        return [self.observation(i) for i in range(len(self))]


def sigmoid(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Logistic function 1 / (1 + exp(-x)), stable over the whole float range.

    Results are kept strictly inside (0, 1): values that round to 0 or 1 in
    double precision are clamped to the nearest representable interior value.

    Args:
        x: Scalar or array of finite reals

    Returns:
        Same shape as x, in (0, 1)
    """
    return np.clip(expit(x), _SIGMOID_FLOOR, _SIGMOID_CEIL)


def select_top_l(scores: Sequence[float], l: int, rng: np.random.Generator) -> Carousel:
    """
    Pick the l highest-scoring arms, best first.

    Ties are broken uniformly at random with one uniform key per arm drawn
    from rng, so the result is deterministic given the rng state.

    Args:
        scores: One finite score per arm (length K)
        l: Number of slots to fill
        rng: Random stream used for tie-breaking

    Returns:
        Carousel of l distinct arm indices ordered by descending score

    Raises:
        ValueError: If l is not in [1, K] or a score is not finite
    """
    scores = np.asarray(scores, dtype=np.float64)
    k = scores.shape[0]
    if l < 1 or l > k:
        raise ValueError(f"cannot select l={l} arms out of K={k}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    tiebreak = rng.random(k)
    # lexsort orders by the last key first
    order = np.lexsort((tiebreak, -scores))[:l]
    return Carousel(tuple(int(arm) for arm in order))


def select_top_l_batch(scores: np.ndarray, l: int, rng: np.random.Generator) -> np.ndarray:
    """
    Row-wise top-l selection for per-user score matrices.

    Every row draws its own uniform tie-break keys, so exact ties are
    broken independently for each user, as select_top_l does for one.

    Args:
        scores: (n, K) score matrix
        l: Number of slots per carousel
        rng: Random stream for the tie-break keys

    Returns:
        (n, l) integer matrix, each row ordered by descending score
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    k = scores.shape[1]
    if l < 1 or l > k:
        raise ValueError(f"cannot select l={l} arms out of K={k}")
    tiebreak = rng.random(scores.shape)
    return np.lexsort((tiebreak, -scores), axis=-1)[:, :l]


def as_carousels(slots: np.ndarray) -> List[Carousel]:
    """Convert an (n, L) slot matrix into Carousel values."""
    return [Carousel(tuple(int(arm) for arm in row)) for row in np.asarray(slots)]
