import argparse
import importlib.metadata
import logging
import os
import sys
from pathlib import Path

from smld.cli import ParseError, ValidationError, exit_codes, parse_config, render, run
from smld.errors import ContractError, InvariantError

logging.captureWarnings(True)
logger = logging.getLogger("smld")
logger.setLevel(logging.INFO)

log_levels = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    def existing_file(file: str) -> Path:
        path = Path(file)
        if not path.exists():
            raise argparse.ArgumentTypeError(f"file {file} does not exist")
        return path

    parser = argparse.ArgumentParser(
        prog="smld",
        description="Orbit interpolation and return sets of analytic maps.",
    )
    parser.add_argument(
        "--config", type=existing_file, help="job document, read from stdin if unset"
    )
    parser.add_argument("--orbit-out", type=Path, help="write the orbit as csv")
    parser.add_argument("--archive", type=Path, help="write an hdf5 archive of the run")
    parser.add_argument("--tol", type=float, help="override the job tolerance")
    parser.add_argument("--n-max", type=int, help="override the job n_max")
    parser.add_argument("--seed", type=int, help="override the job seed")
    args = parser.parse_args(argv)

    if args.tol is not None and not args.tol > 0.0:
        parser.error("--tol must be positive")
    if args.n_max is not None and args.n_max <= 0:
        parser.error("--n-max must be positive")
    if args.seed is not None and args.seed < 0:
        parser.error("--seed must be non-negative")
    return args


def setup_logging() -> None:
    for old in list(logger.handlers):
        logger.removeHandler(old)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.addHandler(handler)

    level = os.environ.get("SMLD_LOG", "info").lower()
    if level not in log_levels:
        logger.setLevel(logging.INFO)
        logger.warning(f"unknown SMLD_LOG level '{level}', using info")
    else:
        logger.setLevel(log_levels[level])


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    setup_logging()
    try:
        logger.debug(f"smld {importlib.metadata.version('smld')} started.")
    except importlib.metadata.PackageNotFoundError:  # pragma: no cover
        logger.debug("smld started.")
    logger.debug(f"using numpy {importlib.metadata.version('numpy')}.")

    if args.config is not None:
        text = args.config.read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()

    try:
        config = parse_config(text)
        if args.tol is not None:
            config.tol = args.tol
        if args.n_max is not None:
            config.n_max = args.n_max
        if args.seed is not None:
            config.seed = args.seed
    except ParseError as e:
        logger.error(str(e))
        return exit_codes["parse"]
    except ValidationError as e:
        logger.error(str(e))
        return exit_codes["validation"]
    except ContractError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return exit_codes["contract"]
    except InvariantError as e:  # pragma: no cover
        logger.error(f"{type(e).__name__}: {e}")
        return exit_codes["invariant"]

    report, code = run(config, orbit_out=args.orbit_out, archive=args.archive)
    sys.stdout.write(render(report) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
