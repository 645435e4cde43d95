import os
from typing import List

import numpy as np

from bid_inference import (
    Bidder, FixedBidder, GridEwBidder, RandomBidder, TruthfulBidder, boundary_frame, counterfactual_deltas,
    rationalizable_set, simulate_auction, write_auction_csv,
)
from errors import ConfigError
from handlers.common import write_frame, write_json


def build_bidders(auction: dict, rng: np.random.Generator) -> List[Bidder]:
    b_max, n = float(auction["b_max"]), int(auction["n"])
    bidders = []
    for index, spec in enumerate(auction["bidders"]):
        kind = spec["type"]
        try:
            if kind == "truthful":
                bidders.append(TruthfulBidder(float(spec["value"])))
            elif kind == "fixed":
                bidders.append(FixedBidder(float(spec["bid"])))
            elif kind == "random":
                bidders.append(RandomBidder(rng, float(spec.get("low", 0.0)), float(spec.get("high", b_max))))
            else:
                grid = np.linspace(0.0, b_max, int(spec.get("grid_points", 20)))
                epsilon = spec.get("epsilon")
                epsilon = None if epsilon in (None, "auto") else float(epsilon)
                bidders.append(GridEwBidder(float(spec["value"]), grid, b_max, rng, epsilon, horizon=n))
        except KeyError as e:
            raise ConfigError(f"auction.bidders[{index}] ({kind}) is missing {e}")
    return bidders


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Simulates an auction and infers the (value, regret) pairs consistent with one bidder's bids."""
    auction = config["auction"]
    rng = np.random.default_rng(seed)
    b_max = float(auction["b_max"])
    log = simulate_auction(build_bidders(auction, rng), int(auction["n"]), auction["mechanism"], b_max,
                           float(auction.get("reserve", 0.0)))
    grid = np.linspace(0.0, b_max, int(config.get("grid_points", 101)))
    deltas = counterfactual_deltas(log, int(config["bidder"]), grid)
    value_range = tuple(config["value_range"]) if "value_range" in config else None
    rset = rationalizable_set(deltas, value_range)

    write_auction_csv(log, os.path.join(trial_dir, "auction_log.csv"))
    write_frame(deltas.to_frame(), os.path.join(trial_dir, "deltas.csv"))
    write_frame(boundary_frame(rset), os.path.join(trial_dir, "boundary.csv"))
    write_json({"bidder": int(config["bidder"]), **rset.to_dict()}, os.path.join(trial_dir, "report.json"))
    return {
        "n": log.n,
        "v_hat": rset.v_hat,
        "r_hat": rset.r_hat,
        "argmin_low": rset.argmin_interval[0],
        "argmin_high": rset.argmin_interval[1],
    }
