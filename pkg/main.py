import asyncio
import logging
import sys
from typing import List, Optional

from codes import ExitCode, Subcommand
from command_router import HANDLERS, build_parser, exit_code_for
from errors import ConfigError, NotAuditableError, RegretLabError
from experiment_config import load_experiment_config, parse_seeds, resolve_seeds
from handlers.common import run_trials
from setup_manager import initialize_app, prepare_output_folder


def run(argv: Optional[List[str]] = None) -> int:
    """
    Runs one subcommand and returns its exit code.

    The config and seed list are validated before anything is written.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(ExitCode.OK if e.code == 0 else ExitCode.ERROR)
    settings = initialize_app(args.log_level)
    subcommand = Subcommand(args.subcommand)
    try:
        config = load_experiment_config(args.config, subcommand)
        seeds = resolve_seeds(config, parse_seeds(args.seeds))
        jobs = args.jobs or config.get("jobs") or settings["jobs"]
        if jobs < 1:
            raise ConfigError("Invalid run flags", [f"--jobs must be at least 1, got {jobs}"])
        out_dir = prepare_output_folder(args.out or config.get("out") or settings["out_dir"])
        logging.info(f"Running {subcommand.value} for seeds {seeds} with {jobs} worker(s) into {out_dir}")
        rows = asyncio.run(run_trials(subcommand, HANDLERS[subcommand], config, seeds, jobs, out_dir))
        return int(exit_code_for(subcommand, rows))
    except ConfigError as e:
        logging.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return int(ExitCode.ERROR)
    except NotAuditableError as e:
        logging.error(f"Not auditable: {e}")
        return int(ExitCode.NOT_AUDITABLE)
    except RegretLabError as e:
        logging.error(f"{subcommand.value} failed: {e}")
        return int(ExitCode.ERROR)
    except Exception as e:
        logging.exception(f"Unexpected failure in {subcommand.value}: {e}")
        if settings.get("sentry_enabled"):
            import sentry_sdk
            sentry_sdk.capture_exception(e)
        return int(ExitCode.ERROR)


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
