import logging
import os
from dataclasses import replace
from typing import List

import numpy as np

from codes import ExitCode, Verdict
from collusion_audit import AuditParams, audit_swap_regret, required_rounds
from handlers.common import write_json
from market_simulator import MarketConfig, market_config_from_dict, seller_from_config, simulate_market, write_market_csv


def market_for_audit(config: dict) -> MarketConfig:
    """
    The market block; with a calibration constant and no explicit horizon,
    the horizon is the number of rounds the audit needs.
    """
    market = market_config_from_dict(config["market"])
    calibration = config.get("calibration")
    if calibration and "horizon" not in config["market"]:
        audit = config["audit"]
        n = required_rounds(market.k, market.p_max, float(audit["alpha_min"]), float(audit["r_bar"]),
                            float(audit["delta"]), float(calibration["constant"]))
        logging.info(f"Calibrated audit horizon: {n} rounds")
        market = replace(market, horizon=n)
    return market


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Simulates the duopoly and audits one seller from its own log."""
    market = market_for_audit(config)
    rng = np.random.default_rng(seed)
    sellers = [seller_from_config(spec, market, j, rng) for j, spec in enumerate(config["sellers"])]
    log = simulate_market(market, sellers, rng)
    params = AuditParams(**config["audit"])
    seller = int(config.get("seller", 0))
    write_market_csv(log, os.path.join(trial_dir, "market_log.csv"))
    report = audit_swap_regret(log, seller, params)
    write_json({"seller": seller, **report.to_dict()}, os.path.join(trial_dir, "report.json"))
    return {
        "n": log.n,
        "verdict": report.verdict.value,
        "r_swap": report.r_swap,
        "cost_hat": report.cost_hat,
        "radius": report.radius,
    }


def exit_code(rows: List[dict]) -> ExitCode:
    """Any failed trial fails the audit run."""
    if any(row["verdict"] == Verdict.FAIL.value for row in rows):
        return ExitCode.AUDIT_FAIL
    return ExitCode.OK
