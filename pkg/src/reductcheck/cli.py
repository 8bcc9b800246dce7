"""Scenario-runner CLI.

    reductcheck list
    reductcheck run config.toml [--out DIR] [--seed N] [--no-plots]
    reductcheck run --scenario NAME [--out DIR] [--seed N] [--no-plots]

Exit status: 0 pass, 1 verdict fail, 2 configuration error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import tomli

from .errors import ConfigurationError, DomainViolation, NumericalBlowup
from .reporting import write_run
from .scenarios import default_params, list_scenarios, run_scenario

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_TOP_LEVEL_KEYS = {"scenario", "seed", "out", "params"}


def load_config(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed TOML in {path}: {exc}")
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    if "scenario" not in data:
        raise ConfigurationError("config must name a scenario")
    if not isinstance(data.get("params", {}), dict):
        raise ConfigurationError("params must be a table")
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reductcheck",
        description="Numerical checks for dynamical-systems reductions between model pairs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write its report")
    run.add_argument("config", nargs="?", type=Path,
                     help="TOML config (omit when using --scenario defaults)")
    run.add_argument("--scenario", help="scenario name, run with default parameters")
    run.add_argument("--out", type=Path, default=None, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the run seed")
    run.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    sub.add_parser("list", help="list scenarios with one-line descriptions")
    return parser


def _command_list() -> int:
    for name, description in list_scenarios():
        print(f"{name:32s} {description}")
    return EXIT_PASS


def _command_run(args) -> int:
    if args.config is None and not args.scenario:
        raise ConfigurationError("run needs a config file or --scenario")
    if args.config is not None and args.scenario:
        raise ConfigurationError("give either a config file or --scenario, not both")
    if args.config is not None:
        data = load_config(args.config)
    else:
        data = {"scenario": args.scenario}
    name = data["scenario"]
    params = data.get("params", {})
    seed = args.seed if args.seed is not None else int(data.get("seed", 0))
    out_dir = args.out or Path(data.get("out", f"runs/{name}"))

    result = run_scenario(name, params=params, seed=seed)
    resolved_config = {
        "scenario": name,
        "seed": seed,
        "params": _merge_echo(name, params),
    }
    report = write_run(out_dir, result, resolved_config,
                       render_figures=not args.no_plots)
    for key in sorted(report.verdicts):
        status = "pass" if report.verdicts[key] else "FAIL"
        print(f"[{status}] {name}: {key}")
    print(f"report: {out_dir / 'report.json'}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _merge_echo(name: str, params: dict) -> dict:
    from .scenarios import _merge

    return _merge(default_params(name), params)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            return _command_list()
        return _command_run(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalBlowup, DomainViolation) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
