"""``ambit-field`` command line.

Exit codes: 0 when every verdict passes, 1 on a failing verdict, 2 on an
invalid configuration or argument, 3 on a numerical failure.

Every other ``AmbitError`` raised during a run (``DomainError``,
``GeometryError``, ``WindowRangeError``, ``UnsupportedLawError``,
``UnclassifiableRegimeError``, ``InvalidParameterError``) means the experiment
asks for something its law, kernel, set or points do not support, and also
exits with 2. The log line names the error class.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from ambit_field_engine.config import load_config
from ambit_field_engine.constants import ExitCode, ModelTest, Subcommand
from ambit_field_engine.engine import AmbitEngine
from ambit_field_engine.exceptions import AmbitError, ConfigError, NumericalFailureError
from ambit_field_engine.settings import EngineSettings
from ambit_field_engine.utils import write_metadata

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambit-field",
        description="Simulate vector ambit fields and verify the small-circle limits of flux and circulation.",
    )
    parser.add_argument("subcommand", choices=[s.value for s in Subcommand])
    parser.add_argument("--config", type=Path, required=True, help="experiment JSON file")
    parser.add_argument("--output", type=Path, default=None, help="output directory (default: AMBIT_OUTPUT_DIR)")
    parser.add_argument("--seed", type=int, default=None, help="experiment seed; required by stochastic subcommands")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (AMBIT_THREADS overrides)")
    parser.add_argument("--dump", type=Path, default=None, help="simulate: write the realization to this .npz")
    parser.add_argument("--replay", type=Path, default=None, help="simulate: read the realization from this .npz")
    parser.add_argument("--test", choices=[t.value for t in ModelTest], default=None, help="model-demo: test to run")
    return parser


def _parse(argv: Sequence[str]) -> argparse.Namespace | int:
    try:
        return build_parser().parse_args(list(argv))
    except SystemExit as e:
        # argparse exits with 2 on bad arguments and 0 on --help
        return int(e.code or 0)


def run(argv: Sequence[str]) -> int:
    """Run one subcommand and return its exit code."""
    args = _parse(argv)
    if isinstance(args, int):
        return args
    settings = EngineSettings()
    logging.basicConfig(level=settings.log_level.upper(), format=LOG_FORMAT)
    subcommand = Subcommand(args.subcommand)

    try:
        config = load_config(args.config)
        if subcommand != Subcommand.GEOMETRY and args.seed is None and config.seed is None:
            raise ConfigError("seed: required by stochastic subcommands; pass --seed or set it in the config")
        output_dir = args.output or settings.output_dir
        with AmbitEngine(config, settings, args.seed, args.threads, output_dir) as engine:
            if subcommand == Subcommand.MODEL_DEMO:
                outcome = engine.model_demo(args.test)
            else:
                outcome = engine.run_subcommand(subcommand, args.dump, args.replay)
            write_metadata(engine.output_dir / "metadata.json", list(argv), engine.config_hash, engine.version)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return ExitCode.CONFIG_ERROR
    except NumericalFailureError as e:
        logger.error(f"Numerical failure: {e} (partial estimate {e.partial_estimate})")
        return ExitCode.NUMERICAL_ERROR
    except AmbitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return ExitCode.CONFIG_ERROR

    for path in outcome.files:
        logger.info(f"Output: {path}")
    if not outcome.passed:
        logger.error(f"{subcommand} verdict: FAIL")
        return ExitCode.VERDICT_FAILURE
    logger.info(f"{subcommand} verdict: pass")
    return ExitCode.OK


def main():
    sys.exit(int(run(sys.argv[1:])))


if __name__ == "__main__":
    main()
