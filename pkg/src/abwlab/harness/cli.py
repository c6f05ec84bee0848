"""Command line interface.

Exit status: 0 on success, 2 for invalid configuration or arguments,
3 when a run fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Sequence

import numpy as np

from .. import fluid
from ..core import AbwError, InvalidArgumentError
from .catalog import get_scenario, scenario_catalog
from .config import FULL_REPETITIONS, ConfigError, ScenarioConfig, load_config
from .output import emit_results, summary
from .runner import Method, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SEED_ENV = "ABWLAB_SEED"

log = logging.getLogger("abwlab")


def _add_scenario_args(p: argparse.ArgumentParser):
    p.add_argument("scenario", nargs="?", help="preset name (see `catalog`)")
    p.add_argument("--config", help="scenario JSON file instead of a preset")


def _add_run_args(p: argparse.ArgumentParser):
    _add_scenario_args(p)
    p.add_argument("--seed", type=int, help=f"master seed (overridden by ${SEED_ENV})")
    p.add_argument("--reps", type=int, help="repetitions per method")
    p.add_argument("--steps", type=int, help="bandit steps (one train each)")
    p.add_argument("--kalman-steps", type=int, help="Kalman iterations (one k-train stream each)")
    p.add_argument("--full", action="store_true", help=f"use {FULL_REPETITIONS} repetitions")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="output directory; summary goes to stdout if omitted")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abwlab", description="Available bandwidth estimation lab.")
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list preset scenarios", parents=[common])
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("fluid-curve", help="fluid rate response and strain curves for a path",
                       parents=[common])
    _add_scenario_args(p)
    p.add_argument("--points", type=int, help="evaluate on this many evenly spaced rates "
                   "instead of the action grid")
    p.add_argument("--out", help="file to write; stdout if omitted")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("run", help="run one estimator on a scenario", parents=[common])
    _add_run_args(p)
    p.add_argument("--method", choices=("bandit", "kalman"), default="bandit")

    p = sub.add_parser("compare", help="run both estimators on a scenario", parents=[common])
    _add_run_args(p)
    return parser


def _resolve_config(args) -> ScenarioConfig:
    if args.config and args.scenario:
        raise ConfigError("give either a scenario name or --config, not both")
    if args.config:
        config = load_config(args.config)
    elif args.scenario:
        try:
            config = get_scenario(args.scenario)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
    else:
        raise ConfigError("a scenario name or --config is required")

    changes = {}
    seed = os.environ.get(SEED_ENV)
    if seed is not None:
        try:
            changes["master_seed"] = int(seed)
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer, got {seed!r}") from None
    elif getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "full", False):
        changes["repetitions"] = FULL_REPETITIONS
    for attr, key in (("reps", "repetitions"), ("steps", "steps"), ("kalman_steps", "kalman_steps")):
        value = getattr(args, attr, None)
        if value is not None:
            changes[key] = value
    return config.replace(**changes) if changes else config


def _catalog(args) -> int:
    cat = scenario_catalog()
    if args.format == "json":
        json.dump({name: c.to_dict() for name, c in cat.items()}, sys.stdout, indent=2)
        print()
        return EXIT_OK
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["name", "links", "true_available_bandwidth_mbps", "gamma"])
    for name, c in cat.items():
        links = " | ".join(f"C={l.capacity:g} {l.cross_traffic.kind.value} {l.cross_traffic.mean_rate:g}"
                           for l in c.path.links)
        w.writerow([name, links, f"{c.true_available_bandwidth:g}", f"{c.bandit.gamma:g}"])
    return EXIT_OK


def _fluid_curve(args) -> int:
    config = _resolve_config(args)
    links = config.path.fluid()
    if args.points:
        if args.points < 2:
            raise ConfigError("--points must be >= 2")
        rates = np.linspace(config.grid.top / args.points, config.grid.top, args.points)
    else:
        rates = config.grid.rates
    gamma = config.bandit.gamma
    rows = []
    for r in rates:
        r_out = fluid.path_rate_response(links, r)
        rows.append({"r_in_mbps": float(r), "r_out_mbps": r_out, "rate_ratio": r / r_out,
                     "strain": r / r_out - 1.0, "reward": fluid.fluid_reward(links, r, gamma)})
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.format == "json":
            json.dump({"scenario": config.name, "gamma": gamma,
                       "available_bandwidth_mbps": config.true_available_bandwidth,
                       "curve": rows}, out, indent=2)
            out.write("\n")
        else:
            w = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for row in rows:
                w.writerow({k: format(v, ".10g") for k, v in row.items()})
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _run(args, methods: Sequence[Method]) -> int:
    config = _resolve_config(args)
    log.info("running %s: %d repetitions, methods %s", config.name, config.repetitions,
             ", ".join(m.value for m in methods))
    result = run_scenario(config, methods, workers=args.workers)
    if args.out:
        for path in emit_results(result, args.format, args.out):
            log.info("wrote %s", path)
    else:
        doc = summary(result)
        doc.pop("config")
        for m in doc["methods"].values():
            m.pop("final_estimates_mbps")
        json.dump(doc, sys.stdout, indent=2)
        print()
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "catalog":
            return _catalog(args)
        if args.command == "fluid-curve":
            return _fluid_curve(args)
        if args.command == "run":
            return _run(args, [Method(args.method.upper())])
        return _run(args, [Method.BANDIT, Method.KALMAN])
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"abwlab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AbwError, OSError, ArithmeticError, ValueError) as exc:
        print(f"abwlab: run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
