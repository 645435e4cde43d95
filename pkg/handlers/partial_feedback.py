import math
import os

import numpy as np

from bandit import HiddenPayoffStream, bandit_regret, exp3_regret_bound
from handlers.common import write_json
from learner_factory import build_learner
from payoff_streams import PenalizePreviousArm, stream_from_config
from play_log_io import write_play_log_csv


def _hidden_stream(spec: dict, k: int, n: int, rng: np.random.Generator, h: float) -> HiddenPayoffStream:
    if spec.get("type") == "penalize_previous":
        return PenalizePreviousArm(spec["means"], n, rng, float(spec.get("penalty", 1.0)), h)
    return HiddenPayoffStream(stream_from_config(spec, k, n, rng, h))


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Bandit-feedback learner: only the played payoff is ever queried."""
    spec = config["learner"]
    n, k = int(config["n"]), int(spec["k"])
    h = float(spec.get("h", 1.0))
    rng = np.random.default_rng(seed)
    stream = _hidden_stream(config["stream"], k, n, rng, h)
    n = min(n, stream.n)
    learner = build_learner(spec, rng, horizon=n)
    for i in range(n):
        action = learner.act()
        learner.observe(stream.payoff(i, action))
    log = learner.play_log()

    use_distributions = bool(config.get("use_distributions", True))
    report = bandit_regret(log, stream, use_distributions)
    bound = exp3_regret_bound(k, n, h) if spec["kind"] == "EW" and k > 1 else math.nan
    write_play_log_csv(log, os.path.join(trial_dir, "play_log.csv"))
    write_json({"learner": spec, "regret": report.to_dict(), "exp3_bound": bound,
                "exploration": learner.exploration}, os.path.join(trial_dir, "report.json"))
    return {"n": n, "regret": report.per_round_regret, "bound": bound}
