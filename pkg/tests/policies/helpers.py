"""
Builders shared by the policy tests.
"""

import numpy as np

from src.models import ObservationBatch, UserBatch
from src.policies.base import SegmentArmStats


def segment_users(segments, d=2):
    """Users with the given segments and bias-only features of dimension d."""
    segments = np.asarray(segments)
    features = np.zeros((len(segments), d))
    features[:, -1] = 1.0
    return UserBatch(user_ids=np.arange(len(segments)), segments=segments, features=features)


def stats_from(displays, successes):
    return SegmentArmStats(np.atleast_2d(np.array(displays, dtype=np.int64)),
                           np.atleast_2d(np.array(successes, dtype=np.int64)))


def observation_batch(users, slots, rewards):
    return ObservationBatch(users=users, slots=np.atleast_2d(slots), rewards=np.atleast_2d(rewards))
