import os

import numpy as np
import pandas as pd

from errors import ConfigError
from game_dynamics import BimatrixGame
from handlers.common import resolve_game, with_default_ceiling, write_frame, write_json
from learner_factory import build_learner
from play_log_io import write_play_log_csv
from stackelberg import ManipulationSchedule, mean_based_check, run_manipulation, stackelberg_value


def build_schedule(game: BimatrixGame, spec: dict) -> ManipulationSchedule:
    """up_then_down {up, down} or static {strategy: index | mixed list | "stackelberg"}."""
    if spec["type"] == "up_then_down":
        return ManipulationSchedule.up_then_down(int(spec.get("up", 0)), int(spec.get("down", 1)))
    strategy = spec.get("strategy", "stackelberg")
    if strategy == "stackelberg":
        strategy = stackelberg_value(game).leader_strategy
    if isinstance(strategy, (list, np.ndarray)) and len(strategy) != game.n_rows:
        raise ConfigError(f"schedule.strategy: expected {game.n_rows} probabilities")
    return ManipulationSchedule.static(strategy)


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Scripted leader against a learning follower, with the value and ceiling it is held to."""
    game = resolve_game(config["game"])
    n = int(config["n"])
    rng = np.random.default_rng(seed)
    if "exploration_epsilon" in config["follower"]:
        raise ConfigError("follower: manipulation runs use full feedback")
    follower = build_learner(with_default_ceiling(config["follower"], game.col_payoffs), rng, horizon=n)
    schedule = build_schedule(game, config["schedule"])
    report = run_manipulation(game, schedule, follower, n, rng)
    log = follower.play_log()

    summary = {**report.to_dict(), "schedule": schedule.to_dict(), "game": game.name}
    if "gamma" in config:
        check = mean_based_check(log, float(config["gamma"]))
        summary["mean_based"] = {"holds": check.holds, "violations": len(check.violations)}
    write_json(summary, os.path.join(trial_dir, "report.json"))
    write_play_log_csv(log, os.path.join(trial_dir, "follower_log.csv"))
    write_frame(pd.DataFrame({"round": np.arange(1, n + 1), "leader_action": report.leader_actions,
                              "leader_payoff": report.leader_payoffs}), os.path.join(trial_dir, "leader.csv"))
    return {
        "n": n,
        "leader_avg": report.leader_avg,
        "sv": report.sv,
        "ceiling": report.ceiling,
        "follower_swap_regret": report.follower_swap_regret.per_round_regret,
    }
