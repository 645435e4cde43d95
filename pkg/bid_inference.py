"""
Revealed-preference inference for bidders assumed to learn.

A bidder with value v and per-round regret r must satisfy, for every
alternative bid z on the deviation grid,

    v * dx(z) - dp(z) >= -r

where dx, dp are the average changes in allocation and payment had the
bidder bid z every round instead. The set of (v, r) meeting all of these is
an intersection of half-planes, hence convex; its lower boundary
r(v) = max_z (dp(z) - v * dx(z)) is convex piecewise linear.

The grid is finite, so r(v) lower-bounds regret against all possible bids.
"""
import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from auction_mechanisms import get_mechanism
from bandit import propensity_score
from codes import LearnerKind
from errors import DomainError
from online_learners import Learner
from utils import ArrayLike, PayoffValidator


@dataclass(frozen=True)
class AuctionLog:
    """
    Bid profiles of n rounds with m bidders.

    mechanism_ids and reserves are per round; reserves of 0 mean none.
    """
    bids: np.ndarray
    mechanism_ids: Tuple[str, ...]
    reserves: np.ndarray
    b_max: float

    def __post_init__(self):
        bids = np.array(self.bids, dtype=float)
        if bids.ndim != 2 or bids.shape[0] == 0:
            raise DomainError(f"Bids must be a non-empty rounds x bidders matrix, got shape {bids.shape}")
        b_max = PayoffValidator.ceiling(self.b_max)
        if np.any(bids < 0) or np.any(bids > b_max + PayoffValidator.SLACK) or not np.all(np.isfinite(bids)):
            raise DomainError(f"Bids must lie in [0, {b_max}]")
        mechanism_ids = tuple(self.mechanism_ids)
        reserves = np.array(self.reserves, dtype=float).reshape(-1)
        if len(mechanism_ids) != bids.shape[0] or reserves.shape[0] != bids.shape[0]:
            raise DomainError("Need one mechanism id and one reserve per round")
        for mechanism_id in set(mechanism_ids):
            get_mechanism(mechanism_id)
        bids.setflags(write=False)
        reserves.setflags(write=False)
        object.__setattr__(self, "bids", bids)
        object.__setattr__(self, "mechanism_ids", mechanism_ids)
        object.__setattr__(self, "reserves", reserves)
        object.__setattr__(self, "b_max", b_max)

    @classmethod
    def single_mechanism(cls, bids: ArrayLike, mechanism_id: str, b_max: float, reserve: float = 0.0) -> "AuctionLog":
        n = np.asarray(bids).shape[0]
        return cls(np.asarray(bids, dtype=float), (mechanism_id,) * n, np.full(n, reserve), b_max)

    @property
    def n(self) -> int:
        return int(self.bids.shape[0])

    @property
    def m(self) -> int:
        return int(self.bids.shape[1])

    def outcomes(self, bids: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Allocation and payment matrices for these (or substituted) bids under each round's rule."""
        bids = self.bids if bids is None else bids
        alloc = np.zeros_like(bids, dtype=float)
        pay = np.zeros_like(bids, dtype=float)
        ids = np.array(self.mechanism_ids)
        for mechanism_id in sorted(set(self.mechanism_ids)):
            rounds = np.flatnonzero(ids == mechanism_id)
            x, p = get_mechanism(mechanism_id)(bids[rounds], self.reserves[rounds])
            alloc[rounds], pay[rounds] = x, p
        return alloc, pay


@dataclass(frozen=True)
class DeviationDeltas:
    """
    Average allocation and payment changes per grid bid, actual minus
    counterfactual. Standard errors are set only for estimated deltas.
    """
    grid: np.ndarray
    delta_alloc: np.ndarray
    delta_pay: np.ndarray
    b_max: float
    alloc_se: Optional[np.ndarray] = None
    pay_se: Optional[np.ndarray] = None

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float).reshape(-1)
        dx = np.array(self.delta_alloc, dtype=float).reshape(-1)
        dp = np.array(self.delta_pay, dtype=float).reshape(-1)
        if grid.size == 0:
            raise DomainError("Deviation grid is empty")
        if dx.shape != grid.shape or dp.shape != grid.shape:
            raise DomainError(f"Grid has {grid.size} bids but deltas have {dx.size} and {dp.size}")
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dp))):
            raise DomainError("Deviation deltas must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "delta_alloc", dx)
        object.__setattr__(self, "delta_pay", dp)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"z": self.grid, "delta_alloc": self.delta_alloc, "delta_pay": self.delta_pay})
        if self.alloc_se is not None:
            frame["alloc_se"] = self.alloc_se
            frame["pay_se"] = self.pay_se
        return frame


def _checked_grid(grid: ArrayLike, b_max: float) -> np.ndarray:
    grid = np.array(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise DomainError("Deviation grid is empty")
    if np.any(grid < 0) or np.any(grid > b_max + PayoffValidator.SLACK):
        raise DomainError(f"Deviation bids must lie in [0, {b_max}]")
    return grid


def counterfactual_deltas(log: AuctionLog, j: int, grid: ArrayLike) -> DeviationDeltas:
    """
    Exact deltas from full bid profiles: every round is replayed with bidder
    j's bid replaced by z, the other bids held fixed.
    """
    j = PayoffValidator.action(j, log.m)
    grid = _checked_grid(grid, log.b_max)
    alloc, pay = log.outcomes()
    dx = np.empty(grid.size)
    dp = np.empty(grid.size)
    for index, z in enumerate(grid):
        bids = log.bids.copy()
        bids[:, j] = z
        x, p = log.outcomes(bids)
        dx[index] = np.mean(alloc[:, j] - x[:, j])
        dp[index] = np.mean(pay[:, j] - p[:, j])
    logging.debug(f"Counterfactual deltas for bidder {j} over {grid.size} bids and {log.n} rounds")
    return DeviationDeltas(grid, dx, dp, log.b_max)


def propensity_deltas(
    grid: ArrayLike,
    bid_indices: Sequence[int],
    alloc: ArrayLike,
    pay: ArrayLike,
    sampling_probs: ArrayLike,
    b_max: float,
) -> DeviationDeltas:
    """
    Deltas estimated from the bidder's own outcomes when it randomizes over
    the grid with known probabilities and sees nothing else.

    The outcome at z is reweighted by 1 / pi(z) in rounds where z was bid,
    which is unbiased for the counterfactual outcome at z.
    """
    grid = _checked_grid(grid, b_max)
    bid_indices = np.asarray(bid_indices, dtype=int)
    alloc = np.asarray(alloc, dtype=float)
    pay = np.asarray(pay, dtype=float)
    probs = np.asarray(sampling_probs, dtype=float)
    n = bid_indices.shape[0]
    if n < 2 or alloc.shape != (n,) or pay.shape != (n,) or probs.shape != (n, grid.size):
        raise DomainError("Need at least two rounds with one outcome and one probability row each")
    dx_terms = np.empty((n, grid.size))
    dp_terms = np.empty((n, grid.size))
    for i in range(n):
        x_hat = propensity_score(alloc[i], bid_indices[i], probs[i], h=1.0).estimated_vector
        p_hat = propensity_score(pay[i], bid_indices[i], probs[i], h=b_max).estimated_vector
        dx_terms[i] = alloc[i] - x_hat
        dp_terms[i] = pay[i] - p_hat
    root_n = np.sqrt(n)
    return DeviationDeltas(
        grid,
        dx_terms.mean(axis=0),
        dp_terms.mean(axis=0),
        b_max,
        alloc_se=dx_terms.std(axis=0, ddof=1) / root_n,
        pay_se=dp_terms.std(axis=0, ddof=1) / root_n,
    )


def _lower_boundary(slopes: np.ndarray, intercepts: np.ndarray, values: np.ndarray) -> np.ndarray:
    """max_z (dp(z) - v * dx(z)) at each v, not floored."""
    return np.max(intercepts[None, :] - np.outer(values, slopes), axis=1)


def _candidates(slopes: np.ndarray, intercepts: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Range endpoints plus every pairwise line intersection inside the range."""
    upper = np.triu_indices(slopes.size, k=1)
    dx = slopes[:, None] - slopes[None, :]
    dp = intercepts[:, None] - intercepts[None, :]
    dx, dp = dx[upper], dp[upper]
    crossing = np.abs(dx) > 1e-15
    points = dp[crossing] / dx[crossing]
    points = points[(points > lo) & (points < hi)]
    return np.unique(np.concatenate([[lo, hi], points]))


@dataclass(frozen=True)
class RationalizableSet:
    """
    All (v, r) with v * dx(z) - dp(z) >= -r for every grid bid z.

    v_hat is the lowest value attaining the minimum implied regret r_hat;
    argmin_interval is the full set of such values.
    """
    grid: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    value_range: Tuple[float, float]
    v_hat: float
    r_hat: float
    argmin_interval: Tuple[float, float]

    @property
    def half_spaces(self) -> List[Tuple[float, float]]:
        return [(float(s), float(c)) for s, c in zip(self.slopes, self.intercepts)]

    def implied_regret(self, values: Union[float, ArrayLike]) -> Union[float, np.ndarray]:
        """Smallest regret rationalizing each value, floored at 0."""
        arr = np.atleast_1d(np.asarray(values, dtype=float))
        regret = np.maximum(_lower_boundary(self.slopes, self.intercepts, arr), 0.0)
        return float(regret[0]) if np.ndim(values) == 0 else regret

    def contains(self, v: float, r: float, tol: float = 1e-9) -> bool:
        return bool(np.all(self.intercepts - v * self.slopes <= r + tol))

    def to_dict(self) -> dict:
        return {
            "half_spaces": [{"delta_alloc": s, "delta_pay": c} for s, c in self.half_spaces],
            "v_hat": self.v_hat,
            "r_hat": self.r_hat,
            "argmin_interval": list(self.argmin_interval),
            "value_range": list(self.value_range),
            "grid": self.grid.tolist(),
        }


def rationalizable_set(deltas: DeviationDeltas, value_range: Optional[Tuple[float, float]] = None) -> RationalizableSet:
    """
    Builds the half-plane description and its minimum-regret point.

    r(v) is minimized exactly by evaluating it at the range endpoints and
    every pairwise intersection of constraint lines; the default range is
    [0, 2 * b_max].
    """
    lo, hi = value_range if value_range is not None else (0.0, 2.0 * deltas.b_max)
    lo, hi = float(lo), float(hi)
    if not lo <= hi:
        raise DomainError(f"Value range [{lo}, {hi}] is empty")
    slopes, intercepts = deltas.delta_alloc, deltas.delta_pay
    candidates = _candidates(slopes, intercepts, lo, hi)
    boundary = _lower_boundary(slopes, intercepts, candidates)
    best = int(np.argmin(boundary))
    level = max(float(boundary[best]), 0.0)

    # {v : dp(z) - v dx(z) <= level for all z}, one half-line per z
    rising, falling = slopes > 0, slopes < 0
    left = max([lo] + list((intercepts[rising] - level) / slopes[rising]))
    right = min([hi] + list((intercepts[falling] - level) / slopes[falling]))
    if left > right:
        left = right = float(candidates[best])
    r_hat = level
    logging.info(f"Rationalizable set: v_hat={left:.6f}, r_hat={r_hat:.6f}, argmin=[{left:.6f}, {right:.6f}]")
    return RationalizableSet(deltas.grid, slopes, intercepts, (lo, hi), float(left), r_hat, (float(left), float(right)))


def boundary_frame(rset: RationalizableSet) -> pd.DataFrame:
    """The lower boundary r(v) at its breakpoints, for plotting the set."""
    lo, hi = rset.value_range
    values = _candidates(rset.slopes, rset.intercepts, lo, hi)
    raw = _lower_boundary(rset.slopes, rset.intercepts, values)
    return pd.DataFrame({"v": values, "r": np.maximum(raw, 0.0), "r_unfloored": raw})


class Bidder(Protocol):
    def bid(self) -> float: ...

    def observe(self, bids: np.ndarray, j: int, mechanism_id: str, reserve: float) -> None: ...


class TruthfulBidder:
    def __init__(self, value: float):
        self.value = float(value)

    def bid(self) -> float:
        return self.value

    def observe(self, bids, j, mechanism_id, reserve) -> None:
        pass


class FixedBidder(TruthfulBidder):
    """Bids the same amount every round, whatever its value."""


class RandomBidder:
    """Uniform on [low, high], or on the given grid with the given probabilities."""

    def __init__(self, rng: np.random.Generator, low: float = 0.0, high: float = 1.0,
                 grid: Optional[ArrayLike] = None, probs: Optional[ArrayLike] = None):
        self.rng = rng
        self.low, self.high = float(low), float(high)
        self.grid = None if grid is None else np.asarray(grid, dtype=float)
        self.probs = None
        if self.grid is not None:
            self.probs = PayoffValidator.distribution(np.full(self.grid.size, 1.0 / self.grid.size) if probs is None else probs,
                                                      self.grid.size)
        self.last_index: Optional[int] = None

    def bid(self) -> float:
        if self.grid is None:
            return float(self.rng.uniform(self.low, self.high))
        self.last_index = int(self.rng.choice(self.grid.size, p=self.probs))
        return float(self.grid[self.last_index])

    def observe(self, bids, j, mechanism_id, reserve) -> None:
        pass


class GridEwBidder:
    """
    Exponential weights over a bid grid with full feedback: after each round
    the bidder scores every grid bid against the others' realized bids.

    Utilities v * x - p are shifted up by b_max so they lie in [0, v + b_max].
    """

    def __init__(self, value: float, grid: ArrayLike, b_max: float, rng: np.random.Generator,
                 epsilon: Optional[float] = None, horizon: Optional[int] = None):
        self.value = float(value)
        self.grid = _checked_grid(grid, b_max)
        self.b_max = float(b_max)
        self.learner = Learner(self.grid.size, LearnerKind.EW, epsilon, h=self.value + self.b_max, rng=rng, horizon=horizon)

    def bid(self) -> float:
        return float(self.grid[self.learner.act()])

    def utilities(self, bids: np.ndarray, j: int, mechanism_id: str, reserve: float) -> np.ndarray:
        profiles = np.tile(bids, (self.grid.size, 1))
        profiles[:, j] = self.grid
        x, p = get_mechanism(mechanism_id)(profiles, reserve)
        return self.value * x[:, j] - p[:, j]

    def observe(self, bids, j, mechanism_id, reserve) -> None:
        self.learner.observe(self.utilities(bids, j, mechanism_id, reserve) + self.b_max)


def simulate_auction(
    bidders: Sequence[Bidder],
    n: int,
    mechanism_id: str,
    b_max: float,
    reserve: float = 0.0,
) -> AuctionLog:
    """Runs n rounds of one sealed-bid rule; bidders see all bids afterwards."""
    mechanism = get_mechanism(mechanism_id)
    if n < 1 or not bidders:
        raise DomainError("An auction needs at least one round and one bidder")
    bids = np.empty((n, len(bidders)))
    for i in range(n):
        bids[i] = [bidder.bid() for bidder in bidders]
        for j, bidder in enumerate(bidders):
            bidder.observe(bids[i], j, mechanism_id, reserve)
    alloc, _ = mechanism(bids, reserve)
    logging.info(f"Simulated {n} rounds of {mechanism_id} with {len(bidders)} bidders; win rates {alloc.mean(axis=0).round(3).tolist()}")
    return AuctionLog.single_mechanism(bids, mechanism_id, b_max, reserve)


def auction_log_frame(log: AuctionLog) -> pd.DataFrame:
    """Long format: one row per round and bidder."""
    alloc, pay = log.outcomes()
    rounds = np.repeat(np.arange(1, log.n + 1), log.m)
    return pd.DataFrame({
        "round": rounds,
        "bidder": np.tile(np.arange(log.m), log.n),
        "bid": log.bids.reshape(-1),
        "alloc": alloc.reshape(-1),
        "pay": pay.reshape(-1),
        "mechanism_id": np.repeat(np.array(log.mechanism_ids), log.m),
        "reserve": np.repeat(log.reserves, log.m),
    })


def write_auction_csv(log: AuctionLog, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    auction_log_frame(log).to_csv(path, index=False, float_format="%.17g")
    return path


def read_auction_csv(path: str, b_max: float) -> AuctionLog:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = {"round", "bidder", "bid", "mechanism_id"} - set(frame.columns)
    if missing:
        raise DomainError(f"{path} is missing columns: {', '.join(sorted(missing))}")
    bids = frame.pivot(index="round", columns="bidder", values="bid").sort_index()
    per_round = frame.groupby("round").first().sort_index()
    reserves = per_round["reserve"].to_numpy() if "reserve" in frame.columns else np.zeros(len(per_round))
    return AuctionLog(bids.to_numpy(), tuple(per_round["mechanism_id"]), reserves, b_max)
