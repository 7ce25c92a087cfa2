"""
Regret Report Module

This module turns trajectory files into summaries: a ranking of policies
by cumulative regret (at the last round or a chosen checkpoint), seed
averages with standard errors, and plot-ready columnar data.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.config import get_file_config
from src.logger import get_logger
from src.runner import RegretTrajectory

# Initialize logger
logger = get_logger("report")


def cumulative_at(trajectory: RegretTrajectory, at_round: Optional[int] = None) -> float:
    """
    Cumulative regret of a trajectory after ``at_round`` rounds (default: all).

    Raises:
        ValueError: If at_round is outside [1, len(trajectory)]
    """
    if at_round is None:
        return trajectory.final
    if not 1 <= at_round <= len(trajectory):
        raise ValueError(f"round {at_round} is outside [1, {len(trajectory)}] for {trajectory.policy_id}")
    return float(trajectory.cumulative[at_round - 1])


def rank_policies(trajectories: Sequence[RegretTrajectory], at_round: Optional[int] = None) -> pd.DataFrame:
    """
    Rank policies by cumulative regret, lowest first.

    Args:
        trajectories: One trajectory per policy
        at_round: Checkpoint round; the final round when omitted

    Returns:
        DataFrame with columns rank, policy_id, cumulative_regret
    """
    rows = [{"policy_id": t.policy_id, "cumulative_regret": cumulative_at(t, at_round)} for t in trajectories]
    frame = pd.DataFrame(rows, columns=["policy_id", "cumulative_regret"])
    frame = frame.sort_values(["cumulative_regret", "policy_id"], kind="stable").reset_index(drop=True)
    frame.insert(0, "rank", np.arange(1, len(frame) + 1))
    return frame


def summarize_runs(runs: Sequence[Sequence[RegretTrajectory]], at_round: Optional[int] = None) -> pd.DataFrame:
    """
    Mean cumulative regret per policy across runs, with its standard error.

    Policies missing from some runs are averaged over the runs that hold
    them; with a single run the standard error is 0.

    Returns:
        DataFrame with columns rank, policy_id, mean_regret, std_error, runs
    """
    values: Dict[str, List[float]] = {}
    for run in runs:
        for trajectory in run:
            values.setdefault(trajectory.policy_id, []).append(cumulative_at(trajectory, at_round))

    rows = []
    for policy_id, finals in values.items():
        finals = np.asarray(finals)
        std_error = float(finals.std(ddof=1) / np.sqrt(len(finals))) if len(finals) > 1 else 0.0
        rows.append({"policy_id": policy_id, "mean_regret": float(finals.mean()),
                     "std_error": std_error, "runs": len(finals)})

    frame = pd.DataFrame(rows, columns=["policy_id", "mean_regret", "std_error", "runs"])
    frame = frame.sort_values(["mean_regret", "policy_id"], kind="stable").reset_index(drop=True)
    frame.insert(0, "rank", np.arange(1, len(frame) + 1))
    return frame


def format_ranking(frame: pd.DataFrame, at_round: Optional[int] = None) -> str:
    """
    Format a ranking table for the terminal.

    Args:
        frame: Output of rank_policies or summarize_runs
        at_round: Checkpoint shown in the title

    Returns:
        Multi-line text table
    """
    when = f"after round {at_round}" if at_round else "at the final round"
    lines = [f"Cumulative expected regret {when}", ""]

    width = max([len("policy")] + [len(str(p)) for p in frame["policy_id"]])
    if "mean_regret" in frame.columns:
        lines.append(f"{'rank':>4}  {'policy':<{width}}  {'mean':>14}  {'std err':>12}  runs")
        for row in frame.itertuples(index=False):
            lines.append(f"{row.rank:>4}  {row.policy_id:<{width}}  {row.mean_regret:>14.4f}  "
                         f"{row.std_error:>12.4f}  {row.runs:>4}")
    else:
        lines.append(f"{'rank':>4}  {'policy':<{width}}  {'regret':>14}")
        for row in frame.itertuples(index=False):
            lines.append(f"{row.rank:>4}  {row.policy_id:<{width}}  {row.cumulative_regret:>14.4f}")
    return "\n".join(lines)


def plot_data(trajectories: Sequence[RegretTrajectory]) -> pd.DataFrame:
    """
    Wide table of cumulative regret: a round column plus one column per policy.

    Shorter trajectories are padded with empty cells.
    """
    n_rounds = max((len(t) for t in trajectories), default=0)
    frame = pd.DataFrame({"round": np.arange(1, n_rounds + 1)})
    for trajectory in trajectories:
        column = np.full(n_rounds, np.nan)
        column[:len(trajectory)] = trajectory.cumulative
        frame[trajectory.policy_id] = column
    return frame


def write_plot_data(trajectories: Sequence[RegretTrajectory], path: Union[str, Path]) -> str:
    """Write plot_data as comma-separated text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    plot_data(trajectories).to_csv(path, index=False, float_format=get_file_config()["float_format"])
    logger.info(f"Saved plot data for {len(trajectories)} policies to {path}")
    return str(path)
