"""
Simulation Environment Module

This module holds the generative side of the simulation: ground-truth
display-to-stream probabilities, per-round user sampling, cascade browsing,
the masking that turns what happened into what a policy is allowed to see,
and the expected-regret oracle.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from src.config import get_thread_count
from src.logger import get_logger
from src.models import (
    ArmParameters,
    Carousel,
    SimulationConfig,
    SlotReward,
    UserBatch,
    UserProfile,
    sigmoid,
)

# Initialize logger
logger = get_logger("environment")

# Stream tags mixed into seeds; keeps sampling, policies and browsing disjoint
SAMPLING_STREAM = 1
POLICY_STREAM = 2
BROWSE_STREAM = 3

# Full probability matrices are memoised below this many (user, arm) pairs
PROB_CACHE_LIMIT = 5_000_000

_SEED_MASK = (1 << 64) - 1


def seed_entropy(*keys: int) -> List[int]:
    """Map signed 64-bit seeds and stream keys to SeedSequence entropy words."""
    return [int(key) & _SEED_MASK for key in keys]


class GroundTruth:
    """
    The simulated world: N users, K arms and their p_ui = sigmoid(x_u . theta_i).

    Users are stored column-wise (ids, segments, feature matrix) so that
    production-scale populations fit in memory; ``users`` and ``arms`` rebuild the
    per-item value types on demand.
    """

    def __init__(self, users: UserBatch, thetas: np.ndarray, arm_ids: Optional[np.ndarray] = None,
                 cache: Optional[bool] = None):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
        if users.features.shape[1] != thetas.shape[1]:
            raise ValueError(
                f"user features have dimension {users.features.shape[1]} "
                f"but arm parameters have dimension {thetas.shape[1]}"
            )
        self.user_table = users
        self.thetas = thetas
        self.arm_ids = np.arange(thetas.shape[0]) if arm_ids is None else np.asarray(arm_ids, dtype=np.int64)

        if cache is None:
            cache = self.n_users * self.k <= PROB_CACHE_LIMIT
        self.prob_cache = sigmoid(users.features @ thetas.T) if cache else None

    @classmethod
    def from_profiles(cls, users: Sequence[UserProfile], arms: Sequence[ArmParameters],
                      cache: Optional[bool] = None) -> 'GroundTruth':
        ordered = sorted(arms, key=lambda arm: arm.arm_id)
        return cls(
            UserBatch.from_profiles(users),
            np.vstack([arm.theta for arm in ordered]),
            np.array([arm.arm_id for arm in ordered]),
            cache=cache,
        )

    @property
    def n_users(self) -> int:
        return len(self.user_table)

    @property
    def k(self) -> int:
        return int(self.thetas.shape[0])

    @property
    def d(self) -> int:
        return int(self.thetas.shape[1])

    @property
    def users(self) -> List[UserProfile]:
        return self.user_table.profiles()

    @property
    def arms(self) -> List[ArmParameters]:
        return [ArmParameters(int(i), theta) for i, theta in zip(self.arm_ids, self.thetas)]

    def batch(self, rows: np.ndarray) -> UserBatch:
        """Users at the given row positions as a UserBatch."""
        rows = np.asarray(rows, dtype=np.int64)
        return UserBatch(
            user_ids=self.user_table.user_ids[rows],
            segments=self.user_table.segments[rows],
            features=self.user_table.features[rows],
        )

    def probabilities(self, rows: np.ndarray) -> np.ndarray:
        """(n, K) matrix of p_ui for the users at the given row positions."""
        rows = np.asarray(rows, dtype=np.int64)
        if self.prob_cache is not None:
            return self.prob_cache[rows]
        return sigmoid(self.user_table.features[rows] @ self.thetas.T)

    def probabilities_for(self, features: np.ndarray) -> np.ndarray:
        """p_ui for arbitrary feature rows (n, D) against every arm."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.d:
            raise ValueError(f"expected features of dimension {self.d}, got {features.shape[1]}")
        return sigmoid(features @ self.thetas.T)


@dataclass(frozen=True)
class BrowseOutcome:
    """What one user actually did: how deep they looked and which ranks they streamed."""

    seen_count: int
    streams: FrozenSet[int]

    def __post_init__(self):
        object.__setattr__(self, "streams", frozenset(int(rank) for rank in self.streams))
        if any(rank < 1 or rank > self.seen_count for rank in self.streams):
            raise ValueError(f"streamed ranks {sorted(self.streams)} exceed seen_count {self.seen_count}")

    def stream_mask(self, l: int) -> np.ndarray:
        mask = np.zeros(l, dtype=bool)
        for rank in self.streams:
            mask[rank - 1] = True
        return mask


def ground_truth_probability(user: UserProfile, arm: ArmParameters) -> float:
    """
    Display-to-stream probability of one (user, arm) pair.

    Raises:
        ValueError: If the feature and weight dimensions differ
    """
    if user.dimension != arm.dimension:
        raise ValueError(f"user dimension {user.dimension} does not match arm dimension {arm.dimension}")
    return float(sigmoid(float(np.dot(user.features, arm.theta))))


def sample_round_indices(ground_truth: GroundTruth, n: int, rng: np.random.Generator) -> np.ndarray:
    """Row positions of n users drawn uniformly without replacement."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > ground_truth.n_users:
        raise ValueError(f"cannot sample {n} users out of {ground_truth.n_users}")
    return rng.choice(ground_truth.n_users, size=n, replace=False)


def sample_round_users(ground_truth: GroundTruth, n: int, rng: np.random.Generator) -> List[UserProfile]:
    """
    Draw a round's active users uniformly without replacement.

    Args:
        ground_truth: Population to draw from
        n: Number of users, at most N
        rng: Random stream

    Returns:
        List of n distinct UserProfile values
    """
    return ground_truth.batch(sample_round_indices(ground_truth, n, rng)).profiles()


def _browse(slot_probabilities: np.ndarray, l_init: int, gamma: float, full_display: bool,
            rng: np.random.Generator) -> Tuple[int, np.ndarray]:
    l = slot_probabilities.shape[0]
    if full_display:
        seen_count = l
    else:
        # Continue past rank j >= l_init with probability gamma, stop at the first failure
        carry_on = rng.random(l - l_init) < gamma
        seen_count = l_init + int(np.cumprod(carry_on).sum())
    streamed = rng.random(l) < slot_probabilities
    streamed[seen_count:] = False
    return seen_count, streamed


def simulate_browse(user: UserProfile, carousel: Carousel, config: SimulationConfig,
                    rng: np.random.Generator, ground_truth: GroundTruth) -> BrowseOutcome:
    """
    Simulate one user's pass over their carousel.

    In cascade_browse mode the first l_init cards are always seen and the user
    keeps swiping one card further with probability gamma after each seen
    card from rank l_init on. In full_display mode all cards are seen. Each
    seen card is streamed independently with its p_ui.

    Args:
        user: The browsing user
        carousel: Cards shown, leftmost first
        config: Carousel size, l_init, gamma and display mode
        rng: The user's random substream
        ground_truth: Source of p_ui

    Returns:
        BrowseOutcome with the true depth and the streamed ranks
    """
    carousel.validate(ground_truth.k, config.l)
    p = ground_truth.probabilities_for(user.features)[0, list(carousel.slots)]
    seen_count, streamed = _browse(p, config.l_init, config.gamma,
                                   config.display_mode == "full_display", rng)
    return BrowseOutcome(seen_count, frozenset(int(r) + 1 for r in np.flatnonzero(streamed)))


def user_rng(seed: int, stream_key: int, round_index: int, user_id: int) -> np.random.Generator:
    """Independent random substream of one user within one round."""
    return np.random.default_rng(seed_entropy(seed, BROWSE_STREAM, stream_key, round_index, user_id))


def simulate_round_browse(user_ids: np.ndarray, slot_probabilities: np.ndarray, config: SimulationConfig,
                          round_index: int, stream_key: int = 0,
                          workers: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Browse simulation for a whole round.

    Each user draws from its own substream keyed by (seed, stream_key,
    round_index, user_id), so splitting the batch over worker threads gives
    the same result as a serial pass.

    Args:
        user_ids: (n,) ids of the round's users
        slot_probabilities: (n, L) p_ui of each user's carousel, slot order
        config: Simulation settings (seed, l_init, gamma, display mode)
        round_index: 1-based round number
        stream_key: Per-policy key separating browsing streams
        workers: Thread count; defaults to get_thread_count()

    Returns:
        (seen_counts (n,), streamed (n, L) boolean matrix)
    """
    slot_probabilities = np.atleast_2d(slot_probabilities)
    n, l = slot_probabilities.shape
    seen_counts = np.empty(n, dtype=np.int64)
    streamed = np.zeros((n, l), dtype=bool)
    full_display = config.display_mode == "full_display"

    def run_chunk(rows: np.ndarray) -> None:
        for row in rows:
            rng = user_rng(config.seed, stream_key, round_index, int(user_ids[row]))
            seen_counts[row], streamed[row] = _browse(
                slot_probabilities[row], config.l_init, config.gamma, full_display, rng
            )

    workers = min(workers or get_thread_count(), max(n, 1))
    chunks = np.array_split(np.arange(n), workers)
    if workers == 1:
        run_chunk(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, chunks))

    return seen_counts, streamed


def observe_cascade_batch(streamed: np.ndarray, l_init: int) -> np.ndarray:
    """
    Cascade masking of a round: ranks beyond max(l_init, last streamed rank) become unseen.

    Only the streams are used; the true browsing depth is never consulted.

    Args:
        streamed: (n, L) boolean stream matrix
        l_init: Number of cards visible without swiping

    Returns:
        (n, L) int8 matrix of SlotReward codes
    """
    streamed = np.atleast_2d(np.asarray(streamed, dtype=bool))
    l = streamed.shape[1]
    last_streamed = np.where(streamed.any(axis=1), l - np.argmax(streamed[:, ::-1], axis=1), 0)
    horizon = np.maximum(l_init, last_streamed)
    ranks = np.arange(1, l + 1)
    return np.where(ranks[None, :] <= horizon[:, None], streamed.astype(np.int8),
                    np.int8(SlotReward.UNSEEN)).astype(np.int8)


def observe_no_cascade_batch(streamed: np.ndarray) -> np.ndarray:
    """Every slot counts as seen: streamed ranks are 1, all others 0."""
    return np.atleast_2d(np.asarray(streamed, dtype=bool)).astype(np.int8)


def observe_cascade(outcome: BrowseOutcome, config: SimulationConfig) -> Tuple[SlotReward, ...]:
    """
    Policy-visible rewards of one carousel under the cascade rule.

    Examples (l_init=3, L=12): no stream gives [0,0,0,X,...]; a stream at
    rank 2 gives [0,1,0,X,...]; streams at ranks 2 and 6 give
    [0,1,0,0,0,1,X,...].
    """
    codes = observe_cascade_batch(outcome.stream_mask(config.l)[None, :], config.l_init)[0]
    return tuple(SlotReward(int(code)) for code in codes)


def observe_no_cascade(outcome: BrowseOutcome, config: SimulationConfig) -> Tuple[SlotReward, ...]:
    """Policy-visible rewards with every slot treated as seen."""
    codes = observe_no_cascade_batch(outcome.stream_mask(config.l)[None, :])[0]
    return tuple(SlotReward(int(code)) for code in codes)


def _top_values_sorted(probabilities: np.ndarray, l: int) -> np.ndarray:
    k = probabilities.shape[1]
    if l < 1 or l > k:
        raise ValueError(f"cannot take the top l={l} of K={k} arms")
    top = -np.partition(-probabilities, l - 1, axis=1)[:, :l]
    return np.sort(top, axis=1)


def optimal_values(probabilities: np.ndarray, l: int) -> np.ndarray:
    """Per-user sum of the l largest p_ui, for an (n, K) probability matrix."""
    return _top_values_sorted(np.atleast_2d(probabilities), l).sum(axis=1)


def optimal_value(user: UserProfile, ground_truth: GroundTruth, l: int) -> float:
    """
    Expected reward of the best possible carousel of l cards for one user.

    Returns:
        Sum of the l largest p_ui over arms
    """
    return float(optimal_values(ground_truth.probabilities_for(user.features), l)[0])


def optimal_set(user: UserProfile, ground_truth: GroundTruth, l: int) -> FrozenSet[int]:
    """One arm set achieving optimal_value (ties resolved towards lower arm indices)."""
    p = ground_truth.probabilities_for(user.features)[0]
    order = np.lexsort((np.arange(p.shape[0]), -p))
    return frozenset(int(arm) for arm in order[:l])


def round_regret_batch(probabilities: np.ndarray, slots: np.ndarray, l: int,
                       best: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Per-user expected regret of a round.

    Both the optimal and the chosen rewards are summed over ascending values,
    so a carousel holding an optimal set scores exactly zero and slot order
    never matters.

    Args:
        probabilities: (n, K) p_ui of the round's users
        slots: (n, L) recommended carousels
        l: Carousel size
        best: Precomputed optimal_values of the same probabilities

    Returns:
        (n,) non-negative regrets
    """
    probabilities = np.atleast_2d(probabilities)
    slots = np.atleast_2d(slots)
    if best is None:
        best = optimal_values(probabilities, l)
    chosen = np.sort(np.take_along_axis(probabilities, slots, axis=1), axis=1).sum(axis=1)
    return best - chosen


def round_regret(recommendations: Sequence[Tuple[UserProfile, Carousel]], ground_truth: GroundTruth,
                 l: int) -> float:
    """
    Expected regret of one round: sum over users of optimal minus chosen expected streams.

    Args:
        recommendations: (user, carousel) pairs of the round
        ground_truth: Source of p_ui
        l: Carousel size

    Returns:
        Total expected regret, >= 0
    """
    if not recommendations:
        return 0.0
    for _, carousel in recommendations:
        carousel.validate(ground_truth.k, l)
    features = np.vstack([user.features for user, _ in recommendations])
    slots = np.array([carousel.slots for _, carousel in recommendations])
    return float(round_regret_batch(ground_truth.probabilities_for(features), slots, l).sum())
