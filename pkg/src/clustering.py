"""
Clustering Module

K-means over user feature vectors, used to assign the segment ids that
segment-level policies share statistics on. The constant bias coordinate
is excluded from the distance computation.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import get_kmeans_defaults
from src.environment import seed_entropy
from src.logger import get_logger
from src.models import UserBatch, UserProfile

# Initialize logger
logger = get_logger("clustering")

# Rows per distance block; bounds the (rows, q) scratch matrix
ASSIGN_CHUNK = 65536


@dataclass
class KMeansResult:
    """Final labels and centroids plus the inertia after every assignment step."""

    labels: np.ndarray
    centroids: np.ndarray
    inertia_history: List[float]
    n_iter: int

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _assign(points: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest centroid and squared distance of every point."""
    labels = np.empty(len(points), dtype=np.int64)
    distances = np.empty(len(points))
    centroid_norms = np.sum(centroids ** 2, axis=1)
    for start in range(0, len(points), ASSIGN_CHUNK):
        block = points[start:start + ASSIGN_CHUNK]
        squared = np.sum(block ** 2, axis=1)[:, None] - 2.0 * block @ centroids.T + centroid_norms[None, :]
        np.maximum(squared, 0.0, out=squared)
        labels[start:start + ASSIGN_CHUNK] = np.argmin(squared, axis=1)
        distances[start:start + ASSIGN_CHUNK] = squared[np.arange(len(block)), labels[start:start + ASSIGN_CHUNK]]
    return labels, distances


def _seed_centroids(points: np.ndarray, q: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; falls back to uniform picks when all remaining distances are zero."""
    n = len(points)
    chosen = [int(rng.integers(n))]
    closest = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, q):
        total = closest.sum()
        if total > 0:
            index = int(rng.choice(n, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            index = int(rng.choice(remaining))
        chosen.append(index)
        np.minimum(closest, np.sum((points - points[index]) ** 2, axis=1), out=closest)
    return points[chosen].copy()


def _reseed_empty(points: np.ndarray, centroids: np.ndarray, labels: np.ndarray,
                  distances: np.ndarray) -> int:
    """Move each empty cluster onto the farthest point of a cluster with spare members."""
    q = len(centroids)
    counts = np.bincount(labels, minlength=q)
    empty = np.flatnonzero(counts == 0)
    for cluster in empty:
        donors = counts[labels] > 1
        candidates = np.where(donors, distances, -1.0)
        index = int(np.argmax(candidates))
        counts[labels[index]] -= 1
        counts[cluster] = 1
        labels[index] = cluster
        centroids[cluster] = points[index]
        distances[index] = 0.0
    if len(empty):
        logger.warning(f"Re-seeded {len(empty)} empty cluster(s) from the farthest points")
    return len(empty)


def _update_centroids(points: np.ndarray, labels: np.ndarray, q: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=q).astype(np.float64)
    sums = np.column_stack([np.bincount(labels, weights=points[:, j], minlength=q)
                            for j in range(points.shape[1])]) if points.shape[1] else np.zeros((q, 0))
    return sums / counts[:, None]


def kmeans(features: np.ndarray, q: int, max_iters: Optional[int] = None, seed: int = 0) -> KMeansResult:
    """
    Lloyd's algorithm with k-means++ seeding.

    Iterates until no assignment changes or ``max_iters`` update steps have
    run. Inertia (sum of squared distances to assigned centroids) never
    increases from one entry of ``inertia_history`` to the next.

    Args:
        features: (n, m) points, bias column already removed
        q: Number of clusters, 1 <= q <= n
        max_iters: Update-step cap, defaults to KMEANS_DEFAULTS
        seed: Seed of the seeding draws

    Returns:
        KMeansResult with labels in [0, q)

    Raises:
        ValueError: If q is outside [1, n]
    """
    points = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = len(points)
    if q < 1 or q > n:
        raise ValueError(f"cannot form {q} clusters from {n} points")
    if max_iters is None:
        max_iters = get_kmeans_defaults()["max_iters"]

    rng = np.random.default_rng(seed_entropy(seed))
    centroids = _seed_centroids(points, q, rng)
    labels, distances = _assign(points, centroids)
    _reseed_empty(points, centroids, labels, distances)
    history = [float(distances.sum())]

    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        centroids = _update_centroids(points, labels, q)
        new_labels, distances = _assign(points, centroids)
        _reseed_empty(points, centroids, new_labels, distances)
        history.append(float(distances.sum()))
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable:
            break
    else:
        if max_iters:
            logger.info(f"k-means stopped at the {max_iters} iteration cap")

    logger.debug(f"k-means: {n} points, {q} clusters, {n_iter} iterations, inertia {history[-1]:.6g}")
    return KMeansResult(labels=labels, centroids=centroids, inertia_history=history, n_iter=n_iter)


def kmeans_segment(users: Union[UserBatch, Sequence[UserProfile]], q: int,
                   max_iters: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """
    Segment ids for a user population.

    Args:
        users: Users whose last feature is the bias coordinate
        q: Number of segments
        max_iters: Iteration cap
        seed: Seed of the seeding draws

    Returns:
        (n,) integer segment ids in [0, q), in the order of ``users``
    """
    batch = UserBatch.coerce(users)
    result = kmeans(batch.features[:, :-1], q, max_iters, seed)
    logger.info(f"Segmented {len(batch)} users into {q} segments in {result.n_iter} iterations")
    return result.labels
