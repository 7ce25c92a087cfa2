"""
Data Storage Module

This module reads and writes the users and arms files of the released
dataset format, bundles them into a validated Dataset, and generates
synthetic ground truth of the same shape for desk-scale experiments.

Users file:  user_id, segment, f_0 .. f_{D-1}   (f_{D-1} is the constant bias 1.0)
Arms file:   arm_id, t_0 .. t_{D-1}
Both are comma-separated UTF-8 text with a mandatory header row.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.config import get_file_config, get_synthetic_defaults
from src.environment import seed_entropy
from src.logger import get_logger
from src.models import ArmParameters, UserBatch, UserProfile

# Initialize logger
logger = get_logger("data_storage")

PathLike = Union[str, Path]


class DatasetError(ValueError):
    """A users or arms file that cannot be loaded."""


@dataclass(eq=False)
class Dataset:
    """Users, arm parameters and the number of segments of one world."""

    users: UserBatch
    thetas: np.ndarray
    q: int

    def __post_init__(self):
        self.thetas = np.atleast_2d(np.asarray(self.thetas, dtype=np.float64))
        if self.users.features.shape[1] != self.thetas.shape[1]:
            raise DatasetError(
                f"user features have dimension {self.users.features.shape[1]}, "
                f"arm parameters have dimension {self.thetas.shape[1]}"
            )
        if len(self.users) and self.users.segments.max() >= self.q:
            raise DatasetError(f"segment {int(self.users.segments.max())} is outside [0, {self.q})")

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def k(self) -> int:
        return int(self.thetas.shape[0])

    @property
    def d(self) -> int:
        return int(self.thetas.shape[1])

    @property
    def arms(self) -> List[ArmParameters]:
        return [ArmParameters(i, theta) for i, theta in enumerate(self.thetas)]

    def user_profiles(self) -> List[UserProfile]:
        return self.users.profiles()


def _read_table(path: PathLike, kind: str, id_columns: int) -> np.ndarray:
    """
    Read a headed CSV file into a float matrix, validating its shape.

    Returns:
        (rows, columns) float64 matrix; the header is checked and dropped
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{kind} file not found: {path}")

    try:
        frame = pd.read_csv(path, header=0, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: empty file, header row missing")
    except pd.errors.ParserError as e:
        raise DatasetError(f"{path}: malformed row: {e}")

    header = list(frame.columns)
    if len(header) < id_columns + 1:
        raise DatasetError(f"{path}: expected at least {id_columns + 1} columns, header has {len(header)}")
    if all(_is_number(name) for name in header):
        raise DatasetError(f"{path}: missing header row")
    if frame.empty:
        raise DatasetError(f"{path}: no data rows")

    short_rows = np.flatnonzero(frame.isna().any(axis=1).to_numpy())
    if len(short_rows):
        line = int(short_rows[0]) + 2
        raise DatasetError(f"{path}: line {line}: expected {len(header)} columns")

    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError:
        line = _first_unparsable_line(frame)
        raise DatasetError(f"{path}: line {line}: non-numeric value")

    bad_rows = np.flatnonzero(~np.isfinite(values).all(axis=1))
    if len(bad_rows):
        raise DatasetError(f"{path}: line {int(bad_rows[0]) + 2}: NaN or infinite value")
    return values


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _first_unparsable_line(frame: pd.DataFrame) -> int:
    for position, row in enumerate(frame.itertuples(index=False)):
        if not all(_is_number(cell) for cell in row):
            return position + 2
    return 0


def _integer_column(values: np.ndarray, path: PathLike, name: str) -> np.ndarray:
    rounded = np.round(values)
    bad = np.flatnonzero((rounded != values) | (values < 0))
    if len(bad):
        raise DatasetError(f"{path}: line {int(bad[0]) + 2}: {name} must be a non-negative integer")
    return rounded.astype(np.int64)


def load_user_batch(path: PathLike, require_bias: bool = True) -> UserBatch:
    """
    Load a users file into a UserBatch.

    Args:
        path: Users CSV file
        require_bias: Check that the last feature equals 1.0 on every row

    Returns:
        UserBatch in file order

    Raises:
        DatasetError: On a missing header, malformed row, bad id or bias
    """
    values = _read_table(path, "users", id_columns=2)
    user_ids = _integer_column(values[:, 0], path, "user_id")
    segments = _integer_column(values[:, 1], path, "segment")
    features = values[:, 2:]
    if require_bias:
        off_bias = np.flatnonzero(features[:, -1] != 1.0)
        if len(off_bias):
            raise DatasetError(f"{path}: line {int(off_bias[0]) + 2}: last feature must be the bias 1.0")
    if len(np.unique(user_ids)) != len(user_ids):
        raise DatasetError(f"{path}: duplicate user ids")
    logger.info(f"Loaded {len(user_ids)} users of dimension {features.shape[1]} from {path}")
    return UserBatch(user_ids=user_ids, segments=segments, features=features)


def load_users(path: PathLike) -> List[UserProfile]:
    """Load a users file as UserProfile values (see load_user_batch)."""
    return load_user_batch(path).profiles()


def load_arm_matrix(path: PathLike) -> np.ndarray:
    """
    Load an arms file into a (K, D) matrix ordered by arm id.

    Raises:
        DatasetError: If arm ids are not exactly 0..K-1
    """
    values = _read_table(path, "arms", id_columns=1)
    arm_ids = _integer_column(values[:, 0], path, "arm_id")
    order = np.argsort(arm_ids, kind="stable")
    if not np.array_equal(arm_ids[order], np.arange(len(arm_ids))):
        raise DatasetError(f"{path}: arm ids must be distinct and cover 0..{len(arm_ids) - 1}")
    logger.info(f"Loaded {len(arm_ids)} arms of dimension {values.shape[1] - 1} from {path}")
    return values[order, 1:]


def load_arms(path: PathLike) -> List[ArmParameters]:
    """Load an arms file as ArmParameters values, ordered by arm id."""
    return [ArmParameters(i, theta) for i, theta in enumerate(load_arm_matrix(path))]


def load_dataset(users_path: PathLike, arms_path: PathLike, q: Optional[int] = None) -> Dataset:
    """
    Load and cross-check a users file and an arms file.

    Args:
        users_path: Users CSV file
        arms_path: Arms CSV file
        q: Segment count; defaults to one more than the largest segment id

    Returns:
        Validated Dataset
    """
    users = load_user_batch(users_path)
    thetas = load_arm_matrix(arms_path)
    if q is None:
        q = int(users.segments.max()) + 1
    return Dataset(users=users, thetas=thetas, q=q)


def _write_frame(frame: pd.DataFrame, path: PathLike) -> str:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    frame.to_csv(path, index=False, float_format=get_file_config()["float_format"], encoding="utf-8")
    return str(path)


def write_users(users: Union[UserBatch, Sequence[UserProfile]], path: PathLike) -> str:
    """
    Write users in the users-file format with 17 significant digits.

    Returns:
        The path written
    """
    batch = UserBatch.coerce(users)
    frame = pd.DataFrame(batch.features, columns=[f"f_{j}" for j in range(batch.features.shape[1])])
    frame.insert(0, "segment", batch.segments)
    frame.insert(0, "user_id", batch.user_ids)
    written = _write_frame(frame, path)
    logger.info(f"Saved {len(batch)} users to {written}")
    return written


def write_arms(arms: Union[np.ndarray, Sequence[ArmParameters]], path: PathLike) -> str:
    """Write arm parameters in the arms-file format."""
    if isinstance(arms, np.ndarray):
        thetas = np.atleast_2d(arms)
    else:
        thetas = np.vstack([arm.theta for arm in sorted(arms, key=lambda arm: arm.arm_id)])
    frame = pd.DataFrame(thetas, columns=[f"t_{j}" for j in range(thetas.shape[1])])
    frame.insert(0, "arm_id", np.arange(thetas.shape[0]))
    written = _write_frame(frame, path)
    logger.info(f"Saved {thetas.shape[0]} arms to {written}")
    return written


def generate_synthetic(k: int, q: int, n: int, d: int, seed: int = 0, **overrides) -> Dataset:
    """
    Generate a synthetic world shaped like the released dataset.

    Users scatter around one Gaussian centroid per segment and carry a final
    bias coordinate of 1.0. Arm weights have Gaussian latent coordinates
    scaled so that the latent part of x . theta has standard deviation
    ``theta_scale``, and a negative bias drawn around ``bias_mean``, which
    keeps stream rates in the low range observed on real carousels.

    Args:
        k: Number of arms
        q: Number of segments
        n: Number of users
        d: Feature dimension including the bias (>= 2)
        seed: Seed of the generator
        **overrides: Any key of SYNTHETIC_DEFAULTS other than the sizes

    Returns:
        Dataset with user ids 0..n-1 and segment ids in [0, q)
    """
    if min(k, q, n) < 1:
        raise ValueError(f"k, q and n must be positive, got k={k}, q={q}, n={n}")
    if d < 2:
        raise ValueError(f"d must be at least 2 (one latent factor plus bias), got {d}")

    settings = {**get_synthetic_defaults(), **overrides}
    rng = np.random.default_rng(seed_entropy(seed))
    latent_dim = d - 1

    centroids = rng.normal(0.0, settings["centroid_std"], size=(q, latent_dim))
    segments = rng.integers(q, size=n)
    latent = centroids[segments] + rng.normal(0.0, settings["user_noise_std"], size=(n, latent_dim))
    features = np.hstack([latent, np.ones((n, 1))])

    spread = np.sqrt(latent_dim * (settings["centroid_std"] ** 2 + settings["user_noise_std"] ** 2))
    theta_latent = rng.normal(0.0, settings["theta_scale"] / spread, size=(k, latent_dim))
    bias = rng.normal(settings["bias_mean"], settings["bias_std"], size=(k, 1))
    thetas = np.hstack([theta_latent, bias])

    logger.info(f"Generated synthetic dataset: {n} users, {k} arms, {q} segments, dimension {d}")
    return Dataset(
        users=UserBatch(user_ids=np.arange(n), segments=segments, features=features),
        thetas=thetas,
        q=q,
    )
