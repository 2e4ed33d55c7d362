"""``hyperdrive-sim`` command line.

Exit codes: 0 on success, 1 when the config or scenario cannot be parsed,
2 when an invariant check fails or a solver does not converge.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .oracles import OracleLimitError, oracle_check
from .runner import run_scenario, write_outputs
from .scenario import ScenarioError, loads_config, loads_scenario

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INVARIANT = 2


def _load(args) -> tuple:
    try:
        cfg_text = Path(args.config).read_text(encoding="utf-8")
        sc_text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(str(exc), "input") from None
    return loads_config(cfg_text), loads_scenario(sc_text, args.seed)


def cmd_simulate(args) -> int:
    cfg, sc = _load(args)
    traj = run_scenario(cfg, sc)
    for path in write_outputs(traj, Path(args.out), args.format):
        print(path)
    if traj.fatal:
        print(f"fatal: {traj.fatal}", file=sys.stderr)
        return EXIT_INVARIANT
    if traj.violations:
        print(f"invariant violated at events {traj.violations}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg, sc = _load(args)
    try:
        report = oracle_check(cfg, sc, args.seed)
    except OracleLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["within_1e-6"] else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperdrive-sim", description="Scenario simulator for the fixed-rate pool.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write its trajectory")
    sim.add_argument("--config", required=True, help="pool config JSON")
    sim.add_argument("--scenario", required=True, help="scenario JSON")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=0, help="seed for stochastic rates that do not set one")
    sim.add_argument("--format", choices=("jsonl", "csv", "both"), default="both")
    sim.set_defaults(func=cmd_simulate)

    orc = sub.add_parser("oracle", help="recheck a small scenario against brute-force oracles")
    orc.add_argument("--config", required=True)
    orc.add_argument("--scenario", required=True)
    orc.add_argument("--seed", type=int, default=0)
    orc.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
