"""
Linear Thompson Sampling Policy

Fully personalised policy: each arm keeps a diagonal Gaussian posterior
over its logistic weights theta_i, refreshed after each round by a
Laplace approximation around the regularised maximum-likelihood mode.
Scores are sigmoid(x_u . theta~) for a fresh posterior draw theta~.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import expit

from src.config import get_policy_settings
from src.logger import get_logger
from src.models import ObservationBatch, UserBatch, UserProfile, select_top_l_batch, sigmoid
from src.policies.base import SCORE_CHUNK, Observations, Policy, Users, as_observation_batch

logger = get_logger("policies.ts_lin")


@dataclass
class LinearArmPosterior:
    """
    Diagonal Gaussian posteriors of all arms.

    ``mean`` and ``precision`` are (K, D); precision is inverse variance and
    stays strictly positive. ``unconverged_updates`` counts arm updates whose
    optimiser stopped before reaching the gradient tolerance.
    """

    mean: np.ndarray
    precision: np.ndarray
    unconverged_updates: int = field(default=0)

    def __post_init__(self):
        self.mean = np.atleast_2d(np.asarray(self.mean, dtype=np.float64))
        self.precision = np.atleast_2d(np.asarray(self.precision, dtype=np.float64))
        if self.mean.shape != self.precision.shape:
            raise ValueError(f"mean {self.mean.shape} and precision {self.precision.shape} differ in shape")
        if np.any(self.precision <= 0):
            raise ValueError("precision must be strictly positive")

    @classmethod
    def prior(cls, k: int, d: int, bias_mean: float = 0.0, precision: float = 1.0) -> 'LinearArmPosterior':
        """All-zero prior mean except the last (bias) coordinate."""
        mean = np.zeros((k, d))
        mean[:, -1] = bias_mean
        return cls(mean, np.full((k, d), float(precision)))

    @property
    def k(self) -> int:
        return int(self.mean.shape[0])

    @property
    def d(self) -> int:
        return int(self.mean.shape[1])


def laplace_objective(theta: np.ndarray, prior_mean: np.ndarray, prior_precision: np.ndarray,
                      features: np.ndarray, labels: np.ndarray) -> float:
    """
    Regularised negative log-likelihood of one arm.

    0.5 * sum_j q_j (theta_j - m_j)^2 + sum_events log(1 + exp(-y x . theta)),
    with labels y in {-1, +1}.
    """
    margins = labels * (features @ theta)
    return float(0.5 * np.sum(prior_precision * (theta - prior_mean) ** 2) + np.sum(np.logaddexp(0.0, -margins)))


def laplace_gradient(theta: np.ndarray, prior_mean: np.ndarray, prior_precision: np.ndarray,
                     features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of laplace_objective with respect to theta."""
    margins = labels * (features @ theta)
    return prior_precision * (theta - prior_mean) - features.T @ (labels * expit(-margins))


def fit_arm_mode(prior_mean: np.ndarray, prior_precision: np.ndarray, features: np.ndarray,
                 labels: np.ndarray, settings: Optional[Dict] = None) -> Tuple[np.ndarray, bool, int]:
    """
    Minimise laplace_objective by preconditioned gradient descent.

    Steps follow the gradient scaled by an upper bound of the Hessian
    diagonal (precision + sum x^2 / 4) and are shortened by Armijo
    backtracking.

    Args:
        prior_mean: (D,) previous posterior mean, also the starting point
        prior_precision: (D,) previous diagonal precision
        features: (n, D) feature rows of the arm's seen displays
        labels: (n,) +1 for a stream, -1 otherwise
        settings: Overrides of the lin_* entries of POLICY_SETTINGS

    Returns:
        (best iterate, converged flag, iterations used)
    """
    settings = {**get_policy_settings(), **(settings or {})}
    max_iter = settings["lin_max_iter"]
    tol = settings["lin_grad_tol"]
    shrink = settings["lin_backtrack_factor"]
    armijo = settings["lin_armijo_c"]

    args = (prior_mean, prior_precision, features, labels)
    scale = prior_precision + 0.25 * np.sum(features ** 2, axis=0)

    theta = prior_mean.copy()
    value = laplace_objective(theta, *args)
    gradient = laplace_gradient(theta, *args)

    for iteration in range(max_iter):
        if np.linalg.norm(gradient) <= tol:
            return theta, True, iteration
        direction = -gradient / scale
        slope = float(gradient @ direction)
        step = 1.0
        while True:
            candidate = theta + step * direction
            candidate_value = laplace_objective(candidate, *args)
            if candidate_value <= value + armijo * step * slope:
                break
            step *= shrink
            if step < 1e-12:
                # No descent left at machine precision
                return theta, bool(np.linalg.norm(gradient) <= tol), iteration
        theta, value = candidate, candidate_value
        gradient = laplace_gradient(theta, *args)

    return theta, bool(np.linalg.norm(gradient) <= tol), max_iter


def ts_lin_sample_score_matrix(posterior: LinearArmPosterior, features: np.ndarray,
                               rng: np.random.Generator) -> np.ndarray:
    """
    Thompson scores for a batch of users against every arm.

    With theta~ drawn from N(m_i, diag(1/q_i)), x_u . theta~ is Gaussian with
    mean x_u . m_i and variance sum_j x_uj^2 / q_ij, so it is drawn directly
    from that marginal.

    Args:
        posterior: Current arm posteriors
        features: (n, D) user features
        rng: Random stream

    Returns:
        (n, K) matrix of sigmoid(x_u . theta~)
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if features.shape[1] != posterior.d:
        raise ValueError(f"expected features of dimension {posterior.d}, got {features.shape[1]}")
    location = features @ posterior.mean.T
    spread = np.sqrt((features ** 2) @ (1.0 / posterior.precision).T)
    return sigmoid(location + spread * rng.standard_normal(location.shape))


def ts_lin_sample_scores(posterior: LinearArmPosterior, user: UserProfile,
                         rng: np.random.Generator) -> np.ndarray:
    """One user's K Thompson scores; a fresh draw on every call."""
    return ts_lin_sample_score_matrix(posterior, user.features[None, :], rng)[0]


def ts_lin_update(posterior: LinearArmPosterior, observations: Observations,
                  settings: Optional[Dict] = None) -> LinearArmPosterior:
    """
    Laplace update of every arm with at least one seen display in the batch.

    The new mean is the mode of the prior-regularised logistic likelihood;
    each precision coordinate then grows by sum x_j^2 s (1 - s) with
    s = sigmoid(x . m_new). Unseen slots and arms without events are left
    alone.

    Args:
        posterior: Posterior before the round
        observations: The round's observations
        settings: Optimiser overrides

    Returns:
        Updated posterior (the input is not modified)
    """
    updated = replace(posterior, mean=posterior.mean.copy(), precision=posterior.precision.copy())
    if len(observations) == 0:
        return updated
    batch = as_observation_batch(observations)
    if batch.users.features.shape[1] != posterior.d:
        raise ValueError(f"observations carry features of dimension {batch.users.features.shape[1]}, "
                         f"expected {posterior.d}")

    rows, cols = np.nonzero(batch.seen)
    if len(rows) == 0:
        return updated
    arms = batch.slots[rows, cols]
    labels = np.where(batch.streamed[rows, cols], 1.0, -1.0)

    order = np.argsort(arms, kind="stable")
    arm_values, starts = np.unique(arms[order], return_index=True)
    groups = np.split(order, starts[1:])

    unconverged = 0
    for arm, events in zip(arm_values, groups):
        features = batch.users.features[rows[events]]
        theta, converged, _ = fit_arm_mode(
            posterior.mean[arm], posterior.precision[arm], features, labels[events], settings
        )
        s = expit(features @ theta)
        updated.mean[arm] = theta
        updated.precision[arm] = posterior.precision[arm] + (features ** 2).T @ (s * (1.0 - s))
        if not converged:
            unconverged += 1

    if unconverged:
        logger.warning(f"Laplace mode search stopped short of tolerance for {unconverged} "
                       f"of {len(arm_values)} arms; kept best iterates")
    updated.unconverged_updates += unconverged
    return updated


class LinearThompsonPolicy(Policy):
    """``ts-lin-naive`` (zero prior mean) and ``ts-lin-pessimistic`` (bias prior mean -5)."""

    def __init__(self, k: int, l: int, q: int = 1, d: int = 1, cascade: bool = True,
                 bias_mean: float = 0.0, precision: float = 1.0, name: str = "ts-lin",
                 settings: Optional[Dict] = None):
        super().__init__(k, l, q, d, cascade)
        self.name = name
        self.settings = settings
        self.posterior = LinearArmPosterior.prior(k, d, bias_mean, precision)

    def recommend(self, users: Users, rng: np.random.Generator) -> np.ndarray:
        batch = UserBatch.coerce(users)
        slots = np.empty((len(batch), self.l), dtype=np.int64)
        for start in range(0, len(batch), SCORE_CHUNK):
            scores = ts_lin_sample_score_matrix(self.posterior, batch.features[start:start + SCORE_CHUNK], rng)
            slots[start:start + SCORE_CHUNK] = select_top_l_batch(scores, self.l, rng)
        return slots

    def _update(self, batch: ObservationBatch) -> None:
        self.posterior = ts_lin_update(self.posterior, batch, self.settings)
