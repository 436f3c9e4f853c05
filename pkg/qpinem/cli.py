#!/usr/bin/env python3
"""
Command-line interface for the qpinem simulator.

This module provides the main entry point for the qpinem CLI tool.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from .chain import run_scenario
from .config import ScenarioConfig, complex_pair, parse_config
from .errors import ConfigError, IncompleteRunError, QpinemError
from .figures import FIGURES, run_figure
from .formatter import Formatter, format_summary
from .loader import load_field_csv
from .scattering import compute_g_qu

logger = logging.getLogger("qpinem")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INCOMPLETE = 4


def create_parser() -> argparse.ArgumentParser:
    """Create the command-line argument parser."""
    parser = argparse.ArgumentParser(
        description="Quantum free-electron / cavity-photon interaction simulator",
        prog="qpinem",
    )

    # Shared by every subcommand so flags may follow the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--verbose", "-v",
        action="count",
        default=0,
        help="Show progress (-v) or debug diagnostics (-vv)"
    )
    common.add_argument(
        "--quiet", "-q",
        action="store_true",
        help="Suppress the summary table"
    )

    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {get_version()}",
        help="Show version number and exit"
    )

    subparsers = parser.add_subparsers(dest="command")

    run = subparsers.add_parser("run", parents=[common], help="Run a scenario file")
    run.add_argument("config", type=str, help="Scenario .json file")
    run.add_argument("--seed", type=int, help="Override the scenario seed")
    run.add_argument("--out", type=str, help="Output directory (default: outputs.directory)")
    run.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Patch the scenario by dotted path, e.g. policies[0].measurement.k=2 (repeatable)"
    )

    figure = subparsers.add_parser("figure", parents=[common], help="Reproduce a figure dataset")
    figure.add_argument("which", choices=sorted(FIGURES), help="Figure to reproduce")
    figure.add_argument("--seed", type=int, help="Base seed for sampled runs (default: 0)")
    figure.add_argument(
        "--scale",
        type=float,
        help="Desk-scale factor in (0, 1] (default: 1, fig5: 0.1)"
    )
    figure.add_argument("--out", type=str, default="out", help="Output directory (default: out)")
    figure.add_argument("--steps", type=int, help="Number of electrons (fig3: step cap)")
    figure.add_argument("--runs", type=int, help="Number of independent runs (fig3)")
    figure.add_argument("--jobs", type=int, help="Worker processes for independent runs (fig3)")
    figure.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Patch a figure parameter, e.g. n_goal=50 (repeatable)"
    )

    gqu = subparsers.add_parser("gqu", parents=[common], help="Compute g_Qu from a sampled field profile")
    gqu.add_argument("field", type=str, help="CSV file with columns z, Re E_z[, Im E_z]")
    gqu.add_argument("--omega", type=float, required=True, help="Angular frequency in rad/s")
    gqu.add_argument("--velocity", "--v", dest="velocity", type=float, required=True,
                     help="Electron speed in m/s")

    return parser


def get_version() -> str:
    """Get the current version of the package."""
    from importlib.metadata import PackageNotFoundError, version
    try:
        return version("qpinem")
    except PackageNotFoundError:
        from . import __version__
        return __version__


def setup_logging(verbosity: int) -> None:
    """Route package logs through rich on stderr."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG

    handler = RichHandler(console=Console(stderr=True), show_path=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    logger.propagate = False


def _output_name(filename: str, run: int, runs: int) -> str:
    if runs == 1:
        return filename
    stem, ext = os.path.splitext(filename)
    return f"{stem}_run{run:03d}{ext}"


def cmd_run(config: ScenarioConfig, out_dir: str, quiet: bool) -> int:
    """Run a validated scenario and write trajectory and snapshot files."""
    formatter = Formatter(config.to_dict(), seed=config.seed)
    initial = config.build_initial()
    rows = []

    for run in range(config.ensemble_size):
        rng = np.random.default_rng(config.seed + run) if config.seed is not None else None
        logger.info("Run %d/%d: %d steps", run + 1, config.ensemble_size, config.n_steps)
        trajectory = run_scenario(
            initial,
            config.policies,
            config.n_steps,
            rng=rng,
            coupling=config.g_qu,
            ensemble=config.ensemble_mode,
            window=config.electron_window,
        )
        extra = {"run": run}
        formatter.write_trajectory(
            os.path.join(out_dir, _output_name(config.outputs.trajectory, run, config.ensemble_size)),
            trajectory,
            extra=extra,
        )
        formatter.write_snapshot(
            os.path.join(out_dir, _output_name(config.outputs.snapshot, run, config.ensemble_size)),
            trajectory.final_state,
            extra=extra,
        )
        final = trajectory.records[-1]
        rows += [
            (f"run {run}: <n>", final.mean_n),
            (f"run {run}: Mandel Q", final.mandel_q),
            (f"run {run}: purity", final.purity),
            (f"run {run}: leakage", trajectory.leakage_total),
        ]

    if not quiet:
        print(format_summary("Scenario", rows), end="")
    return EXIT_OK


def cmd_figure(parsed_args: argparse.Namespace) -> int:
    """Run a figure scenario; exit 4 when a sampled run stopped short of its goal."""
    result = run_figure(
        parsed_args.which,
        parsed_args.out,
        scale=parsed_args.scale,
        overrides=parsed_args.override,
        seed=parsed_args.seed,
        steps=parsed_args.steps,
        runs=parsed_args.runs,
        jobs=parsed_args.jobs,
    )
    if not parsed_args.quiet:
        print(format_summary(f"{result.name} ({len(result.files)} files)", result.summary), end="")
    if not result.complete:
        raise IncompleteRunError(f"{result.name}: some runs did not reach their goal")
    return EXIT_OK


def cmd_gqu(field_path: str, omega: float, velocity: float, quiet: bool) -> int:
    """Print g_Qu for a field profile as JSON, then a summary table."""
    coupling = compute_g_qu(load_field_csv(field_path, omega, velocity))
    print(json.dumps({"g_qu": complex_pair(coupling.g_qu), "abs": abs(coupling)}))
    if not quiet:
        rows = [("Re g_Qu", coupling.g_qu.real), ("Im g_Qu", coupling.g_qu.imag), ("|g_Qu|", abs(coupling))]
        print(format_summary("Coupling", rows), end="")
    return EXIT_OK


def main(args: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    parsed_args = parser.parse_args(args)

    if parsed_args.command is None:
        parser.print_help()
        return 1

    setup_logging(parsed_args.verbose)

    try:
        if parsed_args.command == "run":
            overrides = list(parsed_args.override)
            if parsed_args.seed is not None:
                overrides.append(f"seed={parsed_args.seed}")
            config = parse_config(parsed_args.config, overrides)
            out_dir = parsed_args.out or config.outputs.directory
            return cmd_run(config, out_dir, parsed_args.quiet)

        if parsed_args.command == "figure":
            return cmd_figure(parsed_args)

        return cmd_gqu(parsed_args.field, parsed_args.omega, parsed_args.velocity, parsed_args.quiet)

    except Exception as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        if parsed_args.verbose:
            import traceback
            traceback.print_exc(file=sys.stderr)
        if isinstance(e, (ConfigError, FileNotFoundError)):
            return EXIT_CONFIG
        if isinstance(e, IncompleteRunError):
            return EXIT_INCOMPLETE
        if isinstance(e, QpinemError):
            return EXIT_NUMERICAL
        return 1


if __name__ == "__main__":
    sys.exit(main())
