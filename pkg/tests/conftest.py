"""
Configuration file for pytest.

This file is automatically loaded by pytest and helps set up the test environment.
"""

import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Add the project root directory to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Keep test runs from writing logs and outputs into the project data directory
os.environ.setdefault("CAROUSEL_BANDIT_DATA_DIR", tempfile.mkdtemp(prefix="carousel_bandit_tests_"))

from src.data_storage import generate_synthetic  # noqa: E402
from src.models import SimulationConfig, UserBatch  # noqa: E402

SLOW_TESTS_ENV_VAR = "CAROUSEL_BANDIT_SLOW_TESTS"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale policy comparisons (minutes)")


def pytest_collection_modifyitems(config, items):
    if os.environ.get(SLOW_TESTS_ENV_VAR) == "1":
        return
    skip_slow = pytest.mark.skip(reason=f"set {SLOW_TESTS_ENV_VAR}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_dataset():
    """Eight arms, two segments, sixty users of dimension three."""
    return generate_synthetic(k=8, q=2, n=60, d=3, seed=7)


@pytest.fixture
def small_config():
    return SimulationConfig(k=8, l=3, l_init=2, q=2, d=3, n_users_per_round=10, n_rounds=3, seed=11)


@pytest.fixture
def two_segment_users():
    """Four users, two per segment, with a bias coordinate."""
    return UserBatch(
        user_ids=np.array([10, 11, 12, 13]),
        segments=np.array([0, 0, 1, 1]),
        features=np.array([[0.5, 1.0], [-0.5, 1.0], [1.5, 1.0], [2.0, 1.0]]),
    )
