import os

import pandas as pd

from handlers.common import write_json
from market_simulator import COLLUSIVE_RULE, competitive_benchmark, market_config_from_dict, profit_tables


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Competitive and collusive reference prices; deterministic, the seed only names the folder."""
    market = market_config_from_dict(config["market"])
    bench = competitive_benchmark(market)
    pi1, pi2 = profit_tables(market)
    labels = [f"{p:g}" for p in market.price_grid]
    pd.DataFrame(pi1, index=labels, columns=labels).to_csv(os.path.join(trial_dir, "profits_seller1.csv"))
    pd.DataFrame(pi2, index=labels, columns=labels).to_csv(os.path.join(trial_dir, "profits_seller2.csv"))
    write_json(bench.to_dict(), os.path.join(trial_dir, "report.json"))
    return {
        "competitive_p1": bench.competitive_prices[0],
        "competitive_p2": bench.competitive_prices[1],
        "collusive_p1": bench.collusive_prices[0],
        "collusive_p2": bench.collusive_prices[1],
        "collusive_rule": COLLUSIVE_RULE,
        "joint_max_p1": bench.joint_max_prices[0],
        "joint_max_p2": bench.joint_max_prices[1],
        "converged": bench.converged,
    }
