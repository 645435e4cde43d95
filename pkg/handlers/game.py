import os

import numpy as np

from errors import ConfigError
from game_dynamics import epsilon_ce, epsilon_cce, play_repeated
from handlers.common import resolve_game, with_default_ceiling, write_frame, write_json
from learner_factory import build_learner
from regret_core import best_in_hindsight_regret, swap_regret


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Two full-feedback learners in a repeated game; certifies the empirical joints."""
    game = resolve_game(config["game"])
    n = int(config["n"])
    rng = np.random.default_rng(seed)
    specs = []
    for key, payoffs in (("row_learner", game.row_payoffs), ("col_learner", game.col_payoffs)):
        if "exploration_epsilon" in config[key]:
            raise ConfigError(f"{key}: repeated games run with full feedback")
        specs.append(with_default_ceiling(config[key], payoffs))
    row_learner = build_learner(specs[0], rng, horizon=n)
    col_learner = build_learner(specs[1], rng, horizon=n)
    run = play_repeated(game, row_learner, col_learner, n)

    joints = {"realized": run.joint, "row_view": run.row_view_joint,
              "col_view": run.col_view_joint, "product": run.product_joint}
    gaps = {name: {"cce": epsilon_cce(game, joint).to_dict(), "ce": epsilon_ce(game, joint).to_dict()}
            for name, joint in joints.items()}
    regrets = {
        "row_external": best_in_hindsight_regret(run.row_log).to_dict(),
        "row_swap": swap_regret(run.row_log).to_dict(),
        "col_external": best_in_hindsight_regret(run.col_log).to_dict(),
        "col_swap": swap_regret(run.col_log).to_dict(),
    }
    write_frame(run.pairs_frame(game), os.path.join(trial_dir, "pairs.csv"))
    for name, joint in joints.items():
        joint.to_frame(game).to_csv(os.path.join(trial_dir, f"joint_{name}.csv"))
    write_json({"game": game.name, "n": n, "gaps": gaps, "regrets": regrets}, os.path.join(trial_dir, "report.json"))
    realized_cce = gaps["realized"]["cce"]
    return {
        "n": n,
        "eps_cce_row": realized_cce["eps_row"],
        "eps_cce_col": realized_cce["eps_col"],
        "eps_ce_row": gaps["realized"]["ce"]["eps_row"],
        "eps_ce_col": gaps["realized"]["ce"]["eps_col"],
    }
