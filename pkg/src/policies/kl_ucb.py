"""
KL-UCB Policy

Ranks arms by the KL-UCB upper confidence bound on their Bernoulli stream
rate, computed per segment. The exploration level is log(t) with t the
global round counter.
"""

from typing import Optional, Union

import numpy as np
from scipy.special import xlogy

from src.config import get_policy_settings
from src.models import UserBatch
from src.policies.base import SegmentPolicy, Users, check_segments, greedy_segment_carousels

ArrayLike = Union[float, np.ndarray]

# Float resolution is reached long before this many halvings
MAX_BISECTIONS = 200


def _kl(p: ArrayLike, q: ArrayLike) -> ArrayLike:
    # xlogy gives the 0 * log 0 = 0 convention
    return xlogy(p, p / q) + xlogy(1.0 - p, (1.0 - p) / (1.0 - q))


def kl_bernoulli(p: float, q: float) -> float:
    """
    Kullback-Leibler divergence between Bernoulli(p) and Bernoulli(q).

    Args:
        p: Mean in [0, 1]
        q: Mean in (0, 1)

    Returns:
        p log(p/q) + (1-p) log((1-p)/(1-q)), zero iff p == q

    Raises:
        ValueError: If p is outside [0, 1] or q outside (0, 1)
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    return float(max(_kl(p, q), 0.0))


def kl_ucb_indices(successes: np.ndarray, displays: np.ndarray, t: int,
                   tol: Optional[float] = None, residual_tol: Optional[float] = None) -> np.ndarray:
    """
    Vectorised KL-UCB indices by bisection.

    For each arm returns the largest q in [p_hat, 1) with
    displays * KL(p_hat, q) <= log(t). Bisection runs until the bracket is
    narrower than tol and the slack log(t) - displays * KL(p_hat, q) is at
    most residual_tol, or until the bracket reaches float resolution. Near
    q = 1 the divergence is steep, so the slack bound decides there. Arms
    never displayed get 1.0, as do arms whose empirical mean is already 1.

    Args:
        successes: Stream counts
        displays: Seen-display counts, same shape
        t: Round number, at least 1
        tol: Absolute tolerance on q (default from POLICY_SETTINGS)
        residual_tol: Bound on the slack at the returned q (default from POLICY_SETTINGS)

    Returns:
        Array of indices in [0, 1]
    """
    if t < 1:
        raise ValueError(f"t must be at least 1, got {t}")
    settings = get_policy_settings()
    if tol is None:
        tol = settings["kl_ucb_tol"]
    if residual_tol is None:
        residual_tol = settings["kl_ucb_residual_tol"]
    successes = np.asarray(successes, dtype=np.float64)
    displays = np.asarray(displays, dtype=np.float64)
    if np.any(successes > displays) or np.any(successes < 0):
        raise ValueError("successes must lie between 0 and displays")

    p_hat = np.where(displays > 0, successes / np.maximum(displays, 1.0), 0.0)
    budget = np.log(t)
    active = (displays > 0) & (p_hat < 1.0)

    # lo stays feasible, hi infeasible (or 1)
    lo = p_hat.copy()
    hi = np.ones_like(p_hat)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(MAX_BISECTIONS):
            mid = 0.5 * (lo + hi)
            # lo == p_hat == 0 gives 0 * log(0 / 0); the divergence there is 0
            slack = budget - displays * np.nan_to_num(_kl(p_hat, lo))
            working = active & ((hi - lo > tol) | (slack > residual_tol)) & (lo < mid) & (mid < hi)
            if not working.any():
                break
            feasible = displays * _kl(p_hat, mid) <= budget
            lo = np.where(working & feasible, mid, lo)
            hi = np.where(working & ~feasible, mid, hi)

    return np.where(active, lo, 1.0)


def kl_ucb_index(successes: int, displays: int, t: int, tol: Optional[float] = None) -> float:
    """
    KL-UCB index of a single arm.

    Args:
        successes: Stream count
        displays: Seen-display count
        t: Round number, at least 1
        tol: Absolute tolerance of the bisection

    Returns:
        Upper confidence bound in [successes/displays, 1]
    """
    return float(kl_ucb_indices(np.array([successes]), np.array([displays]), t, tol)[0])


class KLUCBSegmentPolicy(SegmentPolicy):
    """``kl-ucb-seg``: deterministic top-L by KL-UCB index, shared within a segment."""

    name = "kl-ucb-seg"

    def __init__(self, k: int, l: int, q: int = 1, d: int = 1, cascade: bool = True,
                 tol: Optional[float] = None):
        super().__init__(k, l, q, d, cascade)
        self.tol = tol if tol is not None else get_policy_settings()["kl_ucb_tol"]

    def indices(self) -> np.ndarray:
        """(Q, K) KL-UCB indices for the round being played."""
        return kl_ucb_indices(self.stats.successes, self.stats.displays, self.current_round, self.tol)

    def recommend(self, users: Users, rng: np.random.Generator) -> np.ndarray:
        batch = UserBatch.coerce(users)
        check_segments(batch, self.q)
        slots = np.empty((len(batch), self.l), dtype=np.int64)
        greedy_segment_carousels(self.indices(), batch.segments, np.arange(len(batch)), self.l, rng, slots)
        return slots
