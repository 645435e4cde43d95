import os
import sys
import logging
from typing import Optional

from dotenv import load_dotenv

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_FILE_NAME = "regretlab_activity.log"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def setup_logging(level_name: Optional[str] = None):
    """
    Configures the root logger on stderr; stdout is kept for trial summaries.

    The level comes from REGRETLAB_LOG unless given; unknown names fall back to INFO.
    """
    level_name = (level_name or os.getenv('REGRETLAB_LOG') or 'INFO').upper()
    unknown = level_name not in LOG_LEVELS
    logging.basicConfig(
        level=logging.INFO if unknown else getattr(logging, level_name),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
    if unknown:
        logging.warning(f"Unknown REGRETLAB_LOG level '{level_name}'; using INFO")


def load_environment_variables() -> dict:
    """
    Loads optional settings from a .env file and the environment.

    Returns:
        A dict with the output directory, the worker count and the Sentry DSN (or None).
    """
    load_dotenv()

    out_dir = os.getenv('REGRETLAB_OUT') or 'results'
    jobs_raw = os.getenv('REGRETLAB_JOBS') or '1'
    try:
        jobs = max(1, int(jobs_raw))
    except ValueError:
        logging.warning(f"REGRETLAB_JOBS='{jobs_raw}' is not an integer; using 1 worker")
        jobs = 1

    return {
        "out_dir": out_dir,
        "jobs": jobs,
        "sentry_dsn": os.getenv('REGRETLAB_SENTRY_DSN') or None,
    }


def prepare_output_folder(out_dir: str) -> str:
    """
    Creates the output directory and mirrors the log into it.

    Called only once a configuration has been validated, so a rejected run
    leaves nothing behind.
    """
    out_path = os.path.abspath(out_dir)
    if not os.path.exists(out_path):
        logging.info(f"Output folder not found. Creating {out_path}")
        os.makedirs(out_path)
    log_path = os.path.join(out_path, LOG_FILE_NAME)
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, logging.FileHandler):
            root.removeHandler(handler)
            handler.close()
    file_handler = logging.FileHandler(log_path)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(file_handler)
    return out_path


def init_sentry(dsn: Optional[str]) -> bool:
    if not dsn:
        return False
    try:
        import sentry_sdk
    except ImportError:
        logging.warning("REGRETLAB_SENTRY_DSN is set but sentry-sdk is not installed; crash reporting is off")
        return False
    sentry_sdk.init(dsn=dsn, traces_sample_rate=0.0)
    logging.info("Sentry crash reporting enabled.")
    return True


def initialize_app(log_level: Optional[str] = None) -> dict:
    """
    Runs the process setup steps and returns the settings dictionary.
    """
    setup_logging(log_level)
    logging.debug("--- Starting setup ---")

    config = load_environment_variables()
    config["sentry_enabled"] = init_sentry(config["sentry_dsn"])

    logging.debug("--- Setup complete ---")
    return config
