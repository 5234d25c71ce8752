"""Command-line entry point: ``isac-crb run <experiment.json|toml>``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from .errors import ConfigError, ContractError, DomainError, GeometryError, SingularityError
from .experiments import load_spec, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("isac_crb")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isac-crb", description="Bistatic ISAC CRB and SE experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment file")
    run.add_argument("experiment", help="experiment description (.json or .toml)")
    run.add_argument("--seed", type=int, default=None, help="override the Monte-Carlo seed")
    run.add_argument("--out", default=None, help="output CSV path")
    run.add_argument("--threads", type=int, default=1, help="worker threads for realizations")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        spec = load_spec(args.experiment)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        # ConfigError and GeometryError are ValueErrors; so are file parse errors
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        paths = run_experiment(spec, out=args.out, threads=args.threads)
    except (ConfigError, GeometryError, ContractError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (SingularityError, DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
