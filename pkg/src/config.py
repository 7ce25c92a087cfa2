"""
Configuration module for the carousel bandit workbench.

This module provides configuration settings for:
- Simulation protocol defaults (rounds, users per round, carousel size)
- Policy hyperparameters
- Synthetic dataset generation and k-means clustering
- File paths for data, logs and run outputs
- Worker parallelism
"""

import os
from pathlib import Path
from typing import Any, Dict, List

# Base directories
PROJECT_ROOT = Path(__file__).parent.parent
DATA_DIR = Path(os.environ.get("CAROUSEL_BANDIT_DATA_DIR", str(PROJECT_ROOT / "data")))
LOG_DIR = DATA_DIR / "logs"

# Ensure directories exist
DATA_DIR.mkdir(parents=True, exist_ok=True)
LOG_DIR.mkdir(parents=True, exist_ok=True)

# Defaults of the simulation protocol
SIMULATION_DEFAULTS = {
    "rounds": 100,
    "users_per_round": 20000,
    "l": 12,
    "l_init": 3,
    "gamma": 0.9,
    "display_mode": "cascade_browse",
    "seed": 0,
}

DISPLAY_MODES = ["cascade_browse", "full_display"]

# Policy hyperparameters
POLICY_SETTINGS = {
    "epsilon_explore": 0.1,
    "epsilon_exploit": 0.01,
    "etc_explore_threshold": 100,
    "etc_exploit_threshold": 20,
    "beta_prior_naive": (1.0, 1.0),
    "beta_prior_pessimistic": (1.0, 99.0),
    "lin_prior_bias_naive": 0.0,
    "lin_prior_bias_pessimistic": -5.0,
    "lin_prior_precision": 1.0,
    "lin_max_iter": 50,
    "lin_grad_tol": 1e-6,
    "lin_backtrack_factor": 0.5,
    "lin_armijo_c": 1e-4,
    "kl_ucb_tol": 1e-6,
    "kl_ucb_residual_tol": 1e-5,
}

# Synthetic ground truth
SYNTHETIC_DEFAULTS = {
    "k": 100,
    "q": 20,
    "n": 20000,
    "d": 11,
    "bias_mean": -4.0,
    "bias_std": 0.5,
    "centroid_std": 1.0,
    "user_noise_std": 0.5,
    "theta_scale": 1.2,
}

KMEANS_DEFAULTS = {
    "max_iters": 100,
}

# File paths and naming conventions
FILE_CONFIG = {
    "data_dir": str(DATA_DIR),
    "log_dir": str(LOG_DIR),
    "log_filename_format": "carousel_bandit_%Y%m%d.log",
    "manifest_suffix": ".manifest.txt",
    "float_format": "%.17g",
}

THREADS_ENV_VAR = "CAROUSEL_BANDIT_THREADS"


def get_simulation_defaults() -> Dict[str, Any]:
    """
    Return a copy of the simulation protocol defaults.

    Returns:
        Dict: Default values for rounds, users per round, l, l_init, gamma,
        display mode and seed
    """
    return SIMULATION_DEFAULTS.copy()


def get_policy_settings() -> Dict[str, Any]:
    """Return a copy of the policy hyperparameters."""
    return POLICY_SETTINGS.copy()


def get_synthetic_defaults() -> Dict[str, Any]:
    """Return a copy of the synthetic dataset settings."""
    return SYNTHETIC_DEFAULTS.copy()


def get_kmeans_defaults() -> Dict[str, Any]:
    """Return a copy of the k-means settings."""
    return KMEANS_DEFAULTS.copy()


def get_file_config() -> Dict[str, str]:
    """
    Return a copy of the file path and naming configuration.

    Returns:
        Dict: File configuration parameters
    """
    return FILE_CONFIG.copy()


def get_thread_count() -> int:
    """
    Return the number of worker threads to use.

    The value comes from CAROUSEL_BANDIT_THREADS when it holds a positive
    integer, otherwise from the machine's CPU count.

    Returns:
        int: Worker count, at least 1
    """
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if raw:
        try:
            value = int(raw)
            if value > 0:
                return value
        except ValueError:
            pass
    return os.cpu_count() or 1


def validate_config() -> List[str]:
    """
    Validate the configuration and return a list of issues.

    Returns:
        List[str]: Empty list if configuration is valid, otherwise a list of error messages
    """
    issues = []

    raw_threads = os.environ.get(THREADS_ENV_VAR, "").strip()
    if raw_threads:
        try:
            if int(raw_threads) <= 0:
                issues.append(f"{THREADS_ENV_VAR} must be positive, got {raw_threads}")
        except ValueError:
            issues.append(f"{THREADS_ENV_VAR} is not an integer: {raw_threads}")

    if SIMULATION_DEFAULTS["display_mode"] not in DISPLAY_MODES:
        issues.append(f"Unknown display mode: {SIMULATION_DEFAULTS['display_mode']}")

    if not 0.0 <= SIMULATION_DEFAULTS["gamma"] <= 1.0:
        issues.append(f"gamma must lie in [0, 1], got {SIMULATION_DEFAULTS['gamma']}")

    # Check if directories are writable
    for directory in [DATA_DIR, LOG_DIR]:
        if not os.access(directory, os.W_OK):
            issues.append(f"Directory not writable: {directory}")

    return issues
