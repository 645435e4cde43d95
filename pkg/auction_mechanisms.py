"""
Single-item sealed-bid rules evaluated on whole bid matrices at once.

Each rule maps an n x m bid matrix (rounds by bidders) to allocation and
payment matrices of the same shape. The highest bid at or above the
reserve wins, lowest bidder index on ties.
"""
from typing import Callable, Dict, Tuple

import numpy as np

from errors import ConfigError

Outcome = Tuple[np.ndarray, np.ndarray]


def _winners(bids: np.ndarray, reserve: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    bids = np.atleast_2d(np.asarray(bids, dtype=float))
    rounds = np.arange(bids.shape[0])
    winner = np.argmax(bids, axis=1)
    sold = bids[rounds, winner] >= reserve
    return bids, winner, sold


def first_price(bids: np.ndarray, reserve: float = 0.0) -> Outcome:
    bids, winner, sold = _winners(bids, reserve)
    alloc = np.zeros_like(bids)
    pay = np.zeros_like(bids)
    rounds = np.flatnonzero(sold)
    alloc[rounds, winner[sold]] = 1.0
    pay[rounds, winner[sold]] = bids[rounds, winner[sold]]
    return alloc, pay


def second_price(bids: np.ndarray, reserve: float = 0.0) -> Outcome:
    bids, winner, sold = _winners(bids, reserve)
    alloc = np.zeros_like(bids)
    pay = np.zeros_like(bids)
    rounds = np.flatnonzero(sold)
    if bids.shape[1] > 1:
        others = bids.copy()
        others[np.arange(bids.shape[0]), winner] = -np.inf
        runner_up = others.max(axis=1)
    else:
        runner_up = np.full(bids.shape[0], -np.inf)
    price = np.maximum(runner_up, reserve)
    alloc[rounds, winner[sold]] = 1.0
    pay[rounds, winner[sold]] = price[sold]
    return alloc, pay


MECHANISMS: Dict[str, Callable[..., Outcome]] = {
    "first_price": first_price,
    "second_price": second_price,
}


def get_mechanism(mechanism_id: str) -> Callable[..., Outcome]:
    try:
        return MECHANISMS[mechanism_id]
    except KeyError:
        raise ConfigError(f"Unknown mechanism '{mechanism_id}'; known: {', '.join(sorted(MECHANISMS))}")
