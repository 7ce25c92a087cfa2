#!/usr/bin/env python3
"""
Carousel Bandit Simulator - Main Script

This script exposes the full workflow: generating a synthetic world,
segmenting users with k-means, simulating policies on a carousel, and
summarising regret trajectories.
"""

import argparse
import os
import sys
import time
from typing import List, Optional

import dotenv

# Load environment variables from .env file if it exists
dotenv_path = os.path.join(os.path.dirname(__file__), '.env')
if os.path.exists(dotenv_path):
    dotenv.load_dotenv(dotenv_path)

from src.clustering import kmeans_segment
from src.config import (
    DISPLAY_MODES,
    get_file_config,
    get_kmeans_defaults,
    get_simulation_defaults,
    get_synthetic_defaults,
    validate_config,
)
from src.data_storage import generate_synthetic, load_user_batch, write_arms, write_users
from src.logger import get_logger, setup_logging
from src.models import UserBatch
from src.policies import available_policies
from src.report import format_ranking, rank_policies, summarize_runs, write_plot_data
from src.runner import DatasetSource, ExperimentConfig, load_trajectories, run_experiment

# Initialize logger
logger = get_logger("main")


def _synthetic_sizes(text: str) -> dict:
    """Parse K,Q,N,D."""
    parts = text.split(",")
    try:
        k, q, n, d = (int(part) for part in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected four integers K,Q,N,D, got {text!r}")
    return {"k": k, "q": q, "n": n, "d": d}


def _policy_list(text: str) -> List[str]:
    policies = [part.strip() for part in text.split(",") if part.strip()]
    if not policies:
        raise argparse.ArgumentTypeError("expected at least one policy identifier")
    return policies


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-parser per subcommand."""
    sim = get_simulation_defaults()
    synthetic = get_synthetic_defaults()
    data_dir = get_file_config()["data_dir"]
    formatter = argparse.ArgumentDefaultsHelpFormatter

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--debug", action="store_true", help="Enable debug logging")

    parser = argparse.ArgumentParser(description="Simulate bandit policies on a personalised carousel.",
                                     formatter_class=formatter)
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    simulate = subparsers.add_parser("simulate", parents=[common], formatter_class=formatter,
                                     help="Run policies through the round protocol")
    simulate.add_argument("--users", metavar="PATH", help="Users CSV file")
    simulate.add_argument("--arms", metavar="PATH", help="Arms CSV file")
    simulate.add_argument("--synthetic", metavar="K,Q,N,D", type=_synthetic_sizes,
                          help="Generate a synthetic world instead of reading files")
    simulate.add_argument("--policies", required=True, type=_policy_list, metavar="LIST",
                          help=f"Comma-separated policy ids ({', '.join(available_policies())}, "
                               f"each optionally suffixed with -no-cascade)")
    simulate.add_argument("--rounds", type=int, default=sim["rounds"], help="Number of rounds")
    simulate.add_argument("--users-per-round", type=int, default=sim["users_per_round"],
                          help="Users sampled each round")
    simulate.add_argument("--l", type=int, default=sim["l"], help="Carousel size")
    simulate.add_argument("--l-init", type=int, default=sim["l_init"], help="Cards visible without swiping")
    simulate.add_argument("--gamma", type=float, default=sim["gamma"], help="Probability of swiping further")
    simulate.add_argument("--seed", type=int, default=sim["seed"], help="Experiment seed")
    simulate.add_argument("--display-mode", choices=DISPLAY_MODES, default=sim["display_mode"],
                          help="Browsing model")
    simulate.add_argument("--output", metavar="PATH", default=os.path.join(data_dir, "trajectories.csv"),
                          help="Trajectories CSV file")
    simulate.set_defaults(handler=cmd_simulate)

    generate = subparsers.add_parser("generate-data", parents=[common], formatter_class=formatter,
                                     help="Write a synthetic users file and arms file")
    generate.add_argument("--k", type=int, default=synthetic["k"], help="Number of arms")
    generate.add_argument("--q", type=int, default=synthetic["q"], help="Number of segments")
    generate.add_argument("--n", type=int, default=synthetic["n"], help="Number of users")
    generate.add_argument("--d", type=int, default=synthetic["d"], help="Feature dimension including bias")
    generate.add_argument("--seed", type=int, default=0, help="Generator seed")
    generate.add_argument("--users-output", metavar="PATH", default=os.path.join(data_dir, "users.csv"),
                          help="Users CSV file to write")
    generate.add_argument("--arms-output", metavar="PATH", default=os.path.join(data_dir, "arms.csv"),
                          help="Arms CSV file to write")
    generate.set_defaults(handler=cmd_generate_data)

    cluster = subparsers.add_parser("cluster", parents=[common], formatter_class=formatter,
                                    help="Assign user segments with k-means")
    cluster.add_argument("--users", metavar="PATH", required=True, help="Users CSV file")
    cluster.add_argument("--q", type=int, required=True, help="Number of segments")
    cluster.add_argument("--max-iters", type=int, default=get_kmeans_defaults()["max_iters"],
                         help="Iteration cap")
    cluster.add_argument("--seed", type=int, default=0, help="Seeding seed")
    cluster.add_argument("--output", metavar="PATH", default=None,
                         help="Users CSV file to write (rewrites --users when omitted)")
    cluster.set_defaults(handler=cmd_cluster)

    report = subparsers.add_parser("report", parents=[common], formatter_class=formatter,
                                   help="Rank policies from trajectory files")
    report.add_argument("--input", metavar="PATH", nargs="+", required=True,
                        help="Trajectory files; several files are averaged as seeds")
    report.add_argument("--at-round", type=int, default=None, help="Rank at this round instead of the last")
    report.add_argument("--plot-data", metavar="PATH", default=None,
                        help="Write round-by-round cumulative regret of the first file")
    report.set_defaults(handler=cmd_report)

    return parser


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    return build_parser().parse_args(argv)


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run an experiment and write its trajectories and manifest."""
    has_files = args.users is not None or args.arms is not None
    if has_files and args.synthetic is not None:
        raise ValueError("use either --users/--arms or --synthetic, not both")
    if args.synthetic is not None:
        source = DatasetSource(synthetic=args.synthetic)
    elif args.users is not None and args.arms is not None:
        source = DatasetSource(users_path=args.users, arms_path=args.arms)
    else:
        raise ValueError("--users and --arms (or --synthetic K,Q,N,D) are required")

    config = ExperimentConfig(
        policies=args.policies,
        source=source,
        output_path=args.output,
        rounds=args.rounds,
        users_per_round=args.users_per_round,
        l=args.l,
        l_init=args.l_init,
        gamma=args.gamma,
        seed=args.seed,
        display_mode=args.display_mode,
    )
    trajectories = run_experiment(config)
    print(format_ranking(rank_policies(trajectories)))
    print(f"\nTrajectories written to {args.output}")
    return 0


def cmd_generate_data(args: argparse.Namespace) -> int:
    """Write a synthetic users file and arms file."""
    dataset = generate_synthetic(args.k, args.q, args.n, args.d, seed=args.seed)
    write_users(dataset.users, args.users_output)
    write_arms(dataset.thetas, args.arms_output)
    print(f"Wrote {dataset.n} users to {args.users_output} and {dataset.k} arms to {args.arms_output}")
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    """Rewrite the segment column of a users file."""
    users = load_user_batch(args.users)
    segments = kmeans_segment(users, args.q, args.max_iters, args.seed)
    output = args.output or args.users
    write_users(UserBatch(user_ids=users.user_ids, segments=segments, features=users.features), output)
    print(f"Assigned {len(users)} users to {args.q} segments in {output}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    """Print a regret ranking, optionally writing plot data."""
    runs = [load_trajectories(path) for path in args.input]
    if len(runs) == 1:
        table = rank_policies(runs[0], args.at_round)
    else:
        table = summarize_runs(runs, args.at_round)
    print(format_ranking(table, args.at_round))
    if args.plot_data:
        write_plot_data(runs[0], args.plot_data)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main execution function."""
    args = parse_arguments(argv)

    # Set up logging with appropriate level
    log_level = "DEBUG" if args.debug else "INFO"
    setup_logging(log_level)

    config_issues = validate_config()
    if config_issues:
        for issue in config_issues:
            logger.error(f"Configuration error: {issue}")
        logger.error("Exiting due to configuration errors")
        return 1

    start_time = time.perf_counter()
    logger.info(f"Starting {args.command}")
    try:
        code = args.handler(args)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return 1

    logger.info(f"{args.command} completed in {time.perf_counter() - start_time:.2f} seconds")
    return code


if __name__ == "__main__":
    sys.exit(main())
