import json
import logging
import os
from typing import List

import numpy as np
import pandas as pd

from errors import DomainError
from regret_core import PlayLog


def _columns(prefix: str, k: int) -> List[str]:
    return [f"{prefix}_{a + 1}" for a in range(k)]


def play_log_frame(log: PlayLog) -> pd.DataFrame:
    """Lays a PlayLog out as one row per round."""
    data = {"round": np.arange(1, log.n + 1), "action": log.actions}
    if log.payoffs is None:
        data["u_observed"] = log.observed
    else:
        data.update(zip(_columns("u", log.k), log.payoffs.T))
    data.update(zip(_columns("p", log.k), log.distributions.T))
    if log.exploration_probs is not None:
        data.update(zip(_columns("expl", log.k), log.exploration_probs.T))
    if log.residuals is not None:
        data["stationary_residual"] = log.residuals
    frame = pd.DataFrame(data)
    frame["h"] = log.h
    return frame


def write_play_log_csv(log: PlayLog, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    play_log_frame(log).to_csv(path, index=False)
    logging.debug(f"Wrote {log.n}-round play log to {path}")
    return path


def read_play_log_csv(path: str, h: float = None) -> PlayLog:
    """
    Reads a play log written by write_play_log_csv.

    Floats are parsed with round-trip precision so the result is bit-identical
    to the log that was written.
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    p_cols = [c for c in frame.columns if c.startswith("p_")]
    k = len(p_cols)
    if k == 0 or "action" not in frame.columns:
        raise DomainError(f"{path} is not a play log: missing action or p_* columns")
    if h is None:
        h = float(frame["h"].iloc[0]) if "h" in frame.columns and len(frame) else 1.0
    actions = frame["action"].to_numpy(dtype=np.int64)
    distributions = frame[_columns("p", k)].to_numpy(dtype=float)
    payoffs = None
    if "u_observed" in frame.columns:
        observed = frame["u_observed"].to_numpy(dtype=float)
    else:
        payoffs = frame[_columns("u", k)].to_numpy(dtype=float)
        observed = payoffs[np.arange(len(frame)), actions]
    expl = frame[_columns("expl", k)].to_numpy(dtype=float) if "expl_1" in frame.columns else None
    residuals = frame["stationary_residual"].to_numpy(dtype=float) if "stationary_residual" in frame.columns else None
    return PlayLog(distributions, actions, observed, h, payoffs, expl, residuals)


def play_log_to_dict(log: PlayLog) -> dict:
    rounds = []
    for i in range(log.n):
        record = {"action": int(log.actions[i]), "distribution": log.distributions[i].tolist()}
        if log.payoffs is None:
            record["observed"] = float(log.observed[i])
        else:
            record["payoffs"] = log.payoffs[i].tolist()
        if log.exploration_probs is not None:
            record["exploration_probs"] = log.exploration_probs[i].tolist()
        if log.residuals is not None:
            record["stationary_residual"] = float(log.residuals[i])
        rounds.append(record)
    return {"h": log.h, "k": log.k, "n": log.n, "rounds": rounds}


def play_log_from_dict(data: dict) -> PlayLog:
    try:
        k, rounds = int(data["k"]), data["rounds"]
        h = float(data["h"])
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"Malformed play log document: {e}") from e
    n = len(rounds)
    actions = np.array([r["action"] for r in rounds], dtype=np.int64)
    distributions = np.array([r["distribution"] for r in rounds], dtype=float).reshape(n, k)
    full = n > 0 and "payoffs" in rounds[0]
    payoffs = np.array([r["payoffs"] for r in rounds], dtype=float).reshape(n, k) if full else None
    if full:
        observed = payoffs[np.arange(n), actions]
    else:
        observed = np.array([r["observed"] for r in rounds], dtype=float)
    expl = None
    if n and "exploration_probs" in rounds[0]:
        expl = np.array([r["exploration_probs"] for r in rounds], dtype=float).reshape(n, k)
    residuals = None
    if n and "stationary_residual" in rounds[0]:
        residuals = np.array([r["stationary_residual"] for r in rounds], dtype=float)
    return PlayLog(distributions, actions, observed, h, payoffs, expl, residuals)


def write_play_log_json(log: PlayLog, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(play_log_to_dict(log), f)
    return path


def read_play_log_json(path: str) -> PlayLog:
    with open(path) as f:
        return play_log_from_dict(json.load(f))
