"""
Unit tests for regret summaries.
"""

import numpy as np
import pandas as pd
import pytest

from src.report import (
    cumulative_at,
    format_ranking,
    plot_data,
    rank_policies,
    summarize_runs,
    write_plot_data,
)
from src.runner import RegretTrajectory


@pytest.fixture
def trajectories():
    return [
        RegretTrajectory("random", [5.0, 5.0, 5.0]),
        RegretTrajectory("ts-seg-pessimistic", [4.0, 1.0, 0.5]),
        RegretTrajectory("kl-ucb-seg", [6.0, 0.5, 0.5]),
    ]


class TestRanking:
    """Tests for ranking policies."""

    def test_final_round(self, trajectories):
        frame = rank_policies(trajectories)
        assert frame["policy_id"].tolist() == ["ts-seg-pessimistic", "kl-ucb-seg", "random"]
        assert frame["rank"].tolist() == [1, 2, 3]
        assert frame["cumulative_regret"].tolist() == [5.5, 7.0, 15.0]

    def test_checkpoint(self, trajectories):
        frame = rank_policies(trajectories, at_round=1)
        assert frame["policy_id"].tolist() == ["ts-seg-pessimistic", "random", "kl-ucb-seg"]

    def test_checkpoint_out_of_range(self, trajectories):
        with pytest.raises(ValueError):
            cumulative_at(trajectories[0], 4)

    def test_format(self, trajectories):
        text = format_ranking(rank_policies(trajectories), at_round=2)
        lines = text.splitlines()
        assert lines[0] == "Cumulative expected regret after round 2"
        assert len(lines) == 6
        assert lines[3].split()[:2] == ["1", "ts-seg-pessimistic"]


class TestSummaries:
    """Tests for averaging across seeds."""

    def test_mean_and_standard_error(self):
        runs = [
            [RegretTrajectory("random", [10.0]), RegretTrajectory("kl-ucb-seg", [2.0])],
            [RegretTrajectory("random", [14.0]), RegretTrajectory("kl-ucb-seg", [4.0])],
        ]
        frame = summarize_runs(runs)
        assert frame["policy_id"].tolist() == ["kl-ucb-seg", "random"]
        assert frame["mean_regret"].tolist() == [3.0, 12.0]
        expected_se = np.std([10.0, 14.0], ddof=1) / np.sqrt(2)
        assert frame["std_error"].iloc[1] == pytest.approx(expected_se)
        assert frame["runs"].tolist() == [2, 2]
        assert "std err" in format_ranking(frame)

    def test_single_run(self, trajectories):
        frame = summarize_runs([trajectories])
        assert (frame["std_error"] == 0.0).all()


class TestPlotData:
    """Tests for plot-ready output."""

    def test_columns(self, trajectories):
        frame = plot_data(trajectories)
        assert list(frame.columns) == ["round", "random", "ts-seg-pessimistic", "kl-ucb-seg"]
        assert frame["ts-seg-pessimistic"].tolist() == [4.0, 5.0, 5.5]

    def test_uneven_lengths(self):
        frame = plot_data([RegretTrajectory("a", [1.0, 1.0]), RegretTrajectory("b", [2.0])])
        assert len(frame) == 2
        assert np.isnan(frame["b"].iloc[1])

    def test_write(self, trajectories, tmp_path):
        path = write_plot_data(trajectories, tmp_path / "plots" / "regret.csv")
        frame = pd.read_csv(path)
        assert frame["round"].tolist() == [1, 2, 3]
