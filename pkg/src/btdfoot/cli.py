"""Command line entry point: ``btdfoot [options] <step>``.

Options may also come from the environment: ``BTDFOOT_CONFIG``,
``BTDFOOT_SEED``, ``BTDFOOT_OUT``, ``BTDFOOT_MODELS`` and
``BTDFOOT_RANKING``. Command-line flags win over the environment, which wins
over the config file.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .pipeline import (
    STEPS,
    ConfigError,
    DependencyError,
    PipelineError,
    load_config,
    run_pipeline,
    run_step,
    write_manifest,
)

ENV_PREFIX = "BTDFOOT_"
_OVERRIDES = {"seed": "seed", "out": "out", "models": "models", "ranking": "ranking"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btdfoot", description=__doc__.splitlines()[0])
    parser.add_argument("step", choices=[*STEPS, "run"], help="pipeline stage to execute, or 'run' for all of them")
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument("--seed", help="unsigned 64-bit seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--models", help="comma-separated: double,bivariate,diag_inflated,logit")
    parser.add_argument("--ranking", choices=("fifa", "btd", "both"))
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    config_path = args.config or os.environ.get(ENV_PREFIX + "CONFIG")
    if not config_path:
        print("error: no config given (--config or BTDFOOT_CONFIG)", file=sys.stderr)
        return 2
    overrides = {}
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag) or os.environ.get(ENV_PREFIX + flag.upper())
        if value is not None:
            overrides[key] = str(value)
    if "out" in overrides:
        overrides["out"] = str(Path(overrides["out"]).resolve())

    try:
        config = load_config(Path(config_path), overrides)
        if args.step == "run":
            run_pipeline(config)
        else:
            config.out.mkdir(parents=True, exist_ok=True)
            result = run_step(args.step, config)
            if args.step == "report":
                print(result, end="")
            write_manifest(config)
    except (ConfigError, DependencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
