import argparse
from typing import Callable, Dict, List, Optional

from codes import ExitCode, Subcommand
from handlers import audit, benchmark, dynamics, game, infer, learn, manipulate, partial_feedback
from handlers.common import TrialFunction

HANDLERS: Dict[Subcommand, TrialFunction] = {
    Subcommand.LEARN: learn.run_trial,
    Subcommand.BANDIT: partial_feedback.run_trial,
    Subcommand.GAME: game.run_trial,
    Subcommand.DYNAMICS: dynamics.run_trial,
    Subcommand.MANIPULATE: manipulate.run_trial,
    Subcommand.INFER: infer.run_trial,
    Subcommand.AUDIT: audit.run_trial,
    Subcommand.BENCHMARK: benchmark.run_trial,
}

# Subcommands whose exit status depends on the trial outcomes
EXIT_RULES: Dict[Subcommand, Callable[[List[dict]], ExitCode]] = {
    Subcommand.AUDIT: audit.exit_code,
}


def build_parser() -> argparse.ArgumentParser:
    """
    Builds the command line: one subcommand per experiment family, each
    taking the same run flags.
    """
    parser = argparse.ArgumentParser(prog="regretlab", description="No-regret learning experiments and audits.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for subcommand in Subcommand:
        command = sub.add_parser(subcommand.value)
        command.add_argument("--config", required=True, help="JSON experiment config")
        command.add_argument("--seeds", default=None, help="comma list (1,2,3) or range (0:10); overrides the config")
        command.add_argument("--jobs", type=int, default=None, help="parallel trials (default REGRETLAB_JOBS or 1)")
        command.add_argument("--out", default=None, help="output directory (default REGRETLAB_OUT or results)")
        command.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default REGRETLAB_LOG)")
    return parser


def exit_code_for(subcommand: Subcommand, rows: List[dict]) -> ExitCode:
    rule: Optional[Callable[[List[dict]], ExitCode]] = EXIT_RULES.get(subcommand)
    return rule(rows) if rule else ExitCode.OK
