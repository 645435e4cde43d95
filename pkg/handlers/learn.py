import os

import numpy as np

from errors import ConfigError
from handlers.common import write_frame, write_json
from learner_factory import build_learner
from online_learners import ew_regret_bound, ftpl_regret_bound, run_full_feedback
from payoff_streams import stream_from_config
from play_log_io import write_play_log_csv
from regret_core import best_in_hindsight_regret, regret_curve, swap_regret

BOUNDS = {"EW": ew_regret_bound, "FTPL": ftpl_regret_bound}


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Full-feedback learner against an oblivious stream."""
    spec = config["learner"]
    if "exploration_epsilon" in spec:
        raise ConfigError("learn runs full feedback; use the bandit subcommand for exploration_epsilon")
    if config["stream"].get("type") == "penalize_previous":
        raise ConfigError("penalize_previous is an adaptive bandit stream; use the bandit subcommand")
    rng = np.random.default_rng(seed)
    h = float(spec.get("h", 1.0))
    stream = stream_from_config(config["stream"], int(spec["k"]), int(config.get("n", 1000)), rng, h)
    learner = build_learner(spec, rng, horizon=stream.n)
    log = run_full_feedback(learner, stream)

    use_distributions = bool(config.get("use_distributions", True))
    external = best_in_hindsight_regret(log, use_distributions)
    swap = swap_regret(log, use_distributions)
    write_play_log_csv(log, os.path.join(trial_dir, "play_log.csv"))
    write_frame(regret_curve(log, use_distributions), os.path.join(trial_dir, "regret_curve.csv"))
    bound = BOUNDS.get(spec["kind"])
    report = {
        "learner": spec,
        "external": external.to_dict(),
        "swap": swap.to_dict(),
        "regret_bound": bound(log.k, log.n, h) if bound else None,
    }
    write_json(report, os.path.join(trial_dir, "report.json"))
    return {
        "n": log.n,
        "alg_payoff": external.algorithm_payoff,
        "regret": external.per_round_regret,
        "swap_regret": swap.per_round_regret,
    }
