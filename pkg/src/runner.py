"""
Experiment Runner Module

This module plays the simulation protocol: every round samples one batch
of users shared by all policies, lets each policy fill the carousels,
simulates browsing, charges expected regret and then feeds each policy the
whole round's observations at once. Trajectories are written as CSV with a
plain-text manifest alongside.
"""

import time
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.config import get_file_config, get_simulation_defaults, get_thread_count
from src.data_storage import Dataset, DatasetError, generate_synthetic, load_dataset
from src.environment import (
    POLICY_STREAM,
    SAMPLING_STREAM,
    GroundTruth,
    optimal_values,
    round_regret_batch,
    sample_round_indices,
    seed_entropy,
    simulate_round_browse,
)
from src.logger import get_logger
from src.models import ObservationBatch, SimulationConfig
from src.policies import create_policy, parse_policy_id

# Initialize logger
logger = get_logger("runner")

PAIRING_NOTE = "paired: all policies see the same user sample in each round; browsing draws are per policy"

TRAJECTORY_COLUMNS = ["policy_id", "round", "round_regret", "cumulative_regret"]


@dataclass
class DatasetSource:
    """Either a users/arms file pair or the sizes of a synthetic world."""

    users_path: Optional[str] = None
    arms_path: Optional[str] = None
    synthetic: Optional[Dict[str, int]] = None

    def __post_init__(self):
        has_files = self.users_path is not None or self.arms_path is not None
        if has_files == (self.synthetic is not None):
            raise ValueError("dataset source needs either users and arms files or synthetic sizes, not both")
        if has_files and (self.users_path is None or self.arms_path is None):
            raise ValueError("both a users file and an arms file are required")

    def load(self, seed: int = 0) -> Dataset:
        if self.synthetic is not None:
            params = {"seed": seed, **self.synthetic}
            return generate_synthetic(**params)
        return load_dataset(self.users_path, self.arms_path)

    def describe(self) -> str:
        if self.synthetic is not None:
            sizes = ", ".join(f"{key}={value}" for key, value in self.synthetic.items())
            return f"synthetic({sizes})"
        return f"files(users={self.users_path}, arms={self.arms_path})"


@dataclass
class ExperimentConfig:
    """
    Everything one run needs.

    k, q and d are optional expectations; when given they must match the
    loaded dataset.
    """

    policies: List[str]
    source: DatasetSource
    output_path: Optional[str] = None
    rounds: int = field(default_factory=lambda: get_simulation_defaults()["rounds"])
    users_per_round: int = field(default_factory=lambda: get_simulation_defaults()["users_per_round"])
    l: int = field(default_factory=lambda: get_simulation_defaults()["l"])
    l_init: int = field(default_factory=lambda: get_simulation_defaults()["l_init"])
    gamma: float = field(default_factory=lambda: get_simulation_defaults()["gamma"])
    seed: int = field(default_factory=lambda: get_simulation_defaults()["seed"])
    display_mode: str = field(default_factory=lambda: get_simulation_defaults()["display_mode"])
    k: Optional[int] = None
    q: Optional[int] = None
    d: Optional[int] = None
    policy_settings: Optional[Dict] = None

    def __post_init__(self):
        if not self.policies:
            raise ValueError("at least one policy is required")
        if len(set(self.policies)) != len(self.policies):
            raise ValueError(f"duplicate policy identifiers in {self.policies}")
        for policy_id in self.policies:
            parse_policy_id(policy_id)

    def simulation_config(self, dataset: Dataset) -> SimulationConfig:
        """
        Build the SimulationConfig of this run against a loaded dataset.

        Raises:
            ValueError: If an expected size disagrees with the dataset
        """
        for name, expected, actual in (("k", self.k, dataset.k), ("q", self.q, dataset.q), ("d", self.d, dataset.d)):
            if expected is not None and expected != actual:
                raise ValueError(f"configured {name}={expected} but the dataset has {name}={actual}")
        return SimulationConfig(
            k=dataset.k,
            l=self.l,
            l_init=self.l_init,
            q=self.q if self.q is not None else dataset.q,
            d=dataset.d,
            n_users_per_round=self.users_per_round,
            n_rounds=self.rounds,
            gamma=self.gamma,
            seed=self.seed,
            display_mode=self.display_mode,
        )


@dataclass
class RegretTrajectory:
    """Expected regret of one policy, round by round."""

    policy_id: str
    per_round: List[float] = field(default_factory=list)
    realized_streams: List[int] = field(default_factory=list)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.per_round, dtype=np.float64))

    @property
    def final(self) -> float:
        return float(self.cumulative[-1]) if self.per_round else 0.0

    def __len__(self) -> int:
        return len(self.per_round)


def policy_stream_key(policy_id: str) -> int:
    """Stable per-policy seed word (CRC-32 of the identifier)."""
    return zlib.crc32(policy_id.encode("utf-8"))


def run_experiment(config: ExperimentConfig, dataset: Optional[Dataset] = None,
                   workers: Optional[int] = None) -> List[RegretTrajectory]:
    """
    Run every configured policy through the round protocol.

    Args:
        config: Experiment settings
        dataset: Preloaded world; loaded from config.source when omitted
        workers: Browse threads; defaults to get_thread_count()

    Returns:
        One RegretTrajectory per policy, in configuration order

    Raises:
        UnknownPolicyError: If a policy identifier is not registered
        ValueError: On a dataset/config mismatch or invalid sizes
    """
    started = time.perf_counter()
    if dataset is None:
        dataset = config.source.load(config.seed)
    sim = config.simulation_config(dataset)
    if sim.n_users_per_round > dataset.n:
        raise ValueError(f"{sim.n_users_per_round} users per round requested but the dataset has {dataset.n}")
    workers = workers or get_thread_count()

    ground_truth = GroundTruth(dataset.users, dataset.thetas)
    policies = [create_policy(policy_id, sim.k, sim.l, sim.q, sim.d, config.policy_settings)
                for policy_id in config.policies]
    keys = [policy_stream_key(policy.policy_id) for policy in policies]
    trajectories = [RegretTrajectory(policy.policy_id) for policy in policies]
    sampling_rng = np.random.default_rng(seed_entropy(sim.seed, SAMPLING_STREAM))

    logger.info(f"Running {len(policies)} policies for {sim.n_rounds} rounds of "
                f"{sim.n_users_per_round} users (K={sim.k}, L={sim.l}, Q={sim.q}, D={sim.d}, "
                f"{workers} threads)")

    for round_index in range(1, sim.n_rounds + 1):
        rows = sample_round_indices(ground_truth, sim.n_users_per_round, sampling_rng)
        users = ground_truth.batch(rows)
        probabilities = ground_truth.probabilities(rows)
        best = optimal_values(probabilities, sim.l)

        pending = []
        for policy, key, trajectory in zip(policies, keys, trajectories):
            rng = np.random.default_rng(seed_entropy(sim.seed, POLICY_STREAM, key, round_index))
            slots = policy.recommend(users, rng)
            if slots.shape != (len(users), sim.l) or slots.min() < 0 or slots.max() >= sim.k:
                raise ValueError(f"{policy.policy_id} returned carousels of shape {slots.shape} "
                                 f"outside [0, {sim.k})")

            regret = float(round_regret_batch(probabilities, slots, sim.l, best).sum())
            slot_probabilities = np.take_along_axis(probabilities, slots, axis=1)
            _, streamed = simulate_round_browse(users.user_ids, slot_probabilities, sim, round_index,
                                                stream_key=key, workers=workers)
            rewards = policy.observe(streamed, sim.l_init)
            pending.append(ObservationBatch(users=users, slots=slots, rewards=rewards))

            trajectory.per_round.append(regret)
            trajectory.realized_streams.append(int(streamed.sum()))
            logger.debug(f"Round {round_index} {policy.policy_id}: regret {regret:.6g}, "
                         f"{int(streamed.sum())} streams")

        # Feedback is applied only after every policy has recommended
        for policy, observations in zip(policies, pending):
            policy.update_batch(observations)

        if round_index % 10 == 0 or round_index == sim.n_rounds:
            standings = ", ".join(f"{t.policy_id}={t.final:.6g}" for t in trajectories)
            logger.info(f"Round {round_index}/{sim.n_rounds}: cumulative regret {standings}")

    elapsed = time.perf_counter() - started
    logger.info(f"Experiment finished in {elapsed:.1f}s")

    if config.output_path:
        write_trajectories(trajectories, config.output_path)
        write_manifest(config, sim, config.source.describe(), elapsed, config.output_path)
    return trajectories


def trajectories_frame(trajectories: Sequence[RegretTrajectory]) -> pd.DataFrame:
    """Long-format table, one row per (policy, round)."""
    frames = [
        pd.DataFrame({
            "policy_id": trajectory.policy_id,
            "round": np.arange(1, len(trajectory) + 1),
            "round_regret": np.asarray(trajectory.per_round, dtype=np.float64),
            "cumulative_regret": trajectory.cumulative,
        })
        for trajectory in trajectories
    ]
    if not frames:
        return pd.DataFrame(columns=TRAJECTORY_COLUMNS)
    return pd.concat(frames, ignore_index=True)[TRAJECTORY_COLUMNS]


def write_trajectories(trajectories: Sequence[RegretTrajectory], path: Union[str, Path]) -> str:
    """
    Write trajectories as CSV with 17 significant digits.

    Args:
        trajectories: Trajectories to write
        path: Destination file; parent directories are created

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trajectories_frame(trajectories).to_csv(path, index=False, float_format=get_file_config()["float_format"])
    logger.info(f"Saved {len(trajectories)} trajectories to {path}")
    return str(path)


def load_trajectories(path: Union[str, Path]) -> List[RegretTrajectory]:
    """
    Read a trajectories file back, keeping the policies in file order.

    Raises:
        DatasetError: If the file is missing or lacks the expected columns
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"trajectories file not found: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DatasetError(f"{path}: unreadable trajectories file: {e}")
    missing = [column for column in TRAJECTORY_COLUMNS if column not in frame.columns]
    if missing:
        raise DatasetError(f"{path}: missing columns {', '.join(missing)}")

    trajectories = []
    for policy_id in pd.unique(frame["policy_id"]):
        rows = frame[frame["policy_id"] == policy_id].sort_values("round")
        trajectories.append(RegretTrajectory(str(policy_id), rows["round_regret"].astype(float).tolist()))
    return trajectories


def manifest_path(output_path: Union[str, Path]) -> Path:
    return Path(f"{output_path}{get_file_config()['manifest_suffix']}")


def write_manifest(config: ExperimentConfig, sim: SimulationConfig, source: str, wall_clock: float,
                   output_path: Union[str, Path]) -> str:
    """Write the plain-text manifest that sits next to a trajectories file."""
    lines = [
        f"seed: {sim.seed}",
        f"policies: {','.join(config.policies)}",
        f"dataset: {source}",
        f"pairing: {PAIRING_NOTE}",
        "regret: expected regret summed over the round's users",
    ]
    lines += [f"config.{key}: {value}" for key, value in sim.to_dict().items()]
    lines.append(f"wall_clock_seconds: {wall_clock:.3f}")

    path = manifest_path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Saved run manifest to {path}")
    return str(path)


def seed_output_path(output_path: Union[str, Path], seed: int) -> str:
    path = Path(output_path)
    return str(path.with_name(f"{path.stem}_seed{seed}{path.suffix}"))


def run_seeds(config: ExperimentConfig, seeds: Sequence[int],
              workers: Optional[int] = None) -> Dict[int, List[RegretTrajectory]]:
    """
    Repeat an experiment once per seed.

    Synthetic worlds are regenerated from each seed unless the source pins
    its own seed. With an output path, each run writes
    ``<stem>_seed<s><suffix>`` plus its manifest.

    Returns:
        Trajectories keyed by seed
    """
    results = {}
    for seed in seeds:
        output = seed_output_path(config.output_path, seed) if config.output_path else None
        logger.info(f"Starting run with seed {seed}")
        results[seed] = run_experiment(replace(config, seed=seed, output_path=output), workers=workers)
    return results
