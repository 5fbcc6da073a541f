# SPDX-FileCopyrightText: 2023-present Eric T. Johnson
#
# SPDX-License-Identifier: BSD-3-Clause
"""Command-line interface.

Exit status is 0 on success, 2 for an invalid scenario or invocation and 1
for any other failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import TYPE_CHECKING

from qdsat.__about__ import __version__
from qdsat.errors import (
    DomainError,
    InconsistentDistributionError,
    QdsatError,
    ScenarioError,
)
from qdsat.montecarlo import simulate_hbt
from qdsat.scenarios import Mode, list_scenarios, load_scenario
from qdsat.sources import (
    PhotonNumberDistribution,
    coincidence_probability,
    kappa_upper_limit,
    multiphoton_bound,
    solitary_probability,
)
from qdsat.sweep import cutoff_loss, emit_csv, run_sweeps

if TYPE_CHECKING:
    from typing import Sequence

    from qdsat.scenarios import Scenario

__all__ = ["main"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_CONFIG_ERROR = 2

LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        msg = f"expected a positive integer, got {text}"
        raise argparse.ArgumentTypeError(msg)
    return value


def _open_probability(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        msg = f"expected a probability in (0, 1), got {text}"
        raise argparse.ArgumentTypeError(msg)
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdsat",
        description=(
            "Finite-size key length of a satellite BB84 pass with a quantum-dot "
            "or decoy-state source."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="log progress (-v) or details (-vv)",
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="only log errors"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep the channel loss of a scenario")
    run.add_argument(
        "--scenario",
        required=True,
        help="built-in scenario name or path to a TOML scenario file",
    )
    run.add_argument(
        "--mode",
        choices=[m.value for m in Mode],
        help="override the scenario's evaluation mode",
    )
    run.add_argument("--seed", type=int, help="Monte Carlo seed")
    run.add_argument(
        "--slots",
        type=_positive_int,
        help="Monte Carlo slots per sweep point (default: the whole pass)",
    )
    run.add_argument(
        "--out",
        type=Path,
        help="output CSV (default: <scenario name>.csv)",
    )
    run.add_argument(
        "-j",
        "--workers",
        type=_positive_int,
        default=1,
        help="worker processes for the sweep points",
    )

    sub.add_parser("list-scenarios", help="list the built-in scenarios")

    hbt = sub.add_parser("hbt", help="simulate the HBT bench and estimate Pm")
    hbt.add_argument("--p1", type=float, required=True)
    hbt.add_argument("--p2", type=float, required=True)
    hbt.add_argument("--eta", type=float, required=True, help="bench efficiency")
    hbt.add_argument("--slots", type=_positive_int, required=True)
    hbt.add_argument("--seed", type=int, default=42)
    hbt.add_argument(
        "--dark", type=float, default=0.0, help="dark-click probability per window"
    )
    hbt.add_argument(
        "--eps",
        type=_open_probability,
        default=1e-3,
        help="failure probability of the upper limit on kappa",
    )
    hbt.add_argument("-j", "--workers", type=_positive_int, default=1)
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    else:
        level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)]
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.captureWarnings(True)


def _output_paths(scenario: Scenario, out: Path | None, mode: Mode) -> list[Path]:
    path = out if out is not None else Path(f"{scenario.name}.csv")
    if mode is not Mode.BOTH:
        return [path]
    stem = path.with_suffix("")
    return [Path(f"{stem}.analytic.csv"), Path(f"{stem}.mc.csv")]


def _run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.slots is not None:
        scenario = replace(
            scenario, montecarlo=replace(scenario.montecarlo, num_slots=args.slots)
        )
    mode = Mode(args.mode) if args.mode is not None else scenario.mode
    paths = _output_paths(scenario, args.out, mode)
    tables = run_sweeps(scenario, mode=mode, seed=args.seed, workers=args.workers)
    for (single, rows), path in zip(tables.items(), paths):
        emit_csv(rows, path)
        cutoff = cutoff_loss(rows)
        if cutoff is None:
            summary = "no positive key in the sweep"
        else:
            summary = f"positive key up to {cutoff:g} dB"
        print(f"{scenario.name} ({single.value}): {summary} -> {path}", file=sys.stderr)
    return EXIT_OK


def _list_scenarios() -> int:
    for name, description in list_scenarios():
        print(f"{name}\t{description}")
    return EXIT_OK


def _hbt(args: argparse.Namespace) -> int:
    try:
        dist = PhotonNumberDistribution(1.0 - args.p1 - args.p2, args.p1, args.p2)
        measured = simulate_hbt(
            dist, args.eta, args.slots, args.dark, args.seed, workers=args.workers
        )
    except (DomainError, InconsistentDistributionError) as exc:
        print(f"qdsat: invalid bench: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    print(f"N\t{measured.N}")
    print(f"N_C\t{measured.N_C}")
    print(f"N_S\t{measured.N_S}")
    coincident = coincidence_probability(dist, args.eta)
    solitary = solitary_probability(dist, args.eta)
    expected = coincident / solitary if solitary > 0 else math.nan
    print(f"expected_kappa\t{expected!r}")
    if measured.N_S > 0:
        kappa = measured.kappa
        print(f"kappa\t{kappa!r}")
        print(f"Pm_bound\t{multiphoton_bound(kappa, args.eta, dist.non_empty)!r}")
        upper = kappa_upper_limit(measured, args.eps)
        print(f"kappa_upper\t{upper!r}")
        print(f"Pm_upper\t{multiphoton_bound(upper, args.eta, dist.non_empty)!r}")
    else:
        logger.warning("no solitary clicks, kappa is undefined")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "list-scenarios":
            return _list_scenarios()
        return _hbt(args)
    except ScenarioError as exc:
        print(f"qdsat: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (QdsatError, OSError) as exc:
        print(f"qdsat: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
