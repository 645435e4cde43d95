"""
Repeated duopoly price competition with a single buyer per round.

Each round the buyer draws values (v_1, v_2), both sellers post prices from
a shared grid, and the buyer purchases from the seller offering the higher
net value v_j - p_j provided it is positive. Sellers only learn whether they
sold and their own profit.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import quad

from bandit import BanditLearner
from codes import LearnerKind
from errors import ConfigError, DomainError
from swap_reduction import SdaLearner
from utils import ArrayLike, PayoffValidator

TIE_RULES = ("lowest", "split")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class ValueDistribution:
    """Independent uniform values on [low_j, high_j]; low == high is a point mass."""
    low: Tuple[float, float] = (0.0, 0.0)
    high: Tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        low = tuple(float(x) for x in self.low)
        high = tuple(float(x) for x in self.high)
        if len(low) != 2 or len(high) != 2 or any(lo > hi or lo < 0 for lo, hi in zip(low, high)):
            raise ConfigError(f"Value intervals must be two ordered non-negative ranges, got {low} and {high}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, 2))

    def is_point(self, j: int) -> bool:
        return self.high[j] - self.low[j] <= TIE_TOL

    def cdf(self, j: int, t: float) -> float:
        lo, hi = self.low[j], self.high[j]
        if self.is_point(j):
            return 1.0 if t > lo else 0.0
        return float(np.clip((t - lo) / (hi - lo), 0.0, 1.0))


@dataclass(frozen=True)
class MarketConfig:
    costs: Tuple[float, float]
    price_grid: np.ndarray
    horizon: int
    values: ValueDistribution = field(default_factory=ValueDistribution)
    tie_rule: str = "lowest"

    def __post_init__(self):
        problems = []
        costs = tuple(float(c) for c in self.costs)
        grid = np.array(self.price_grid, dtype=float).reshape(-1)
        if len(costs) != 2 or min(costs) < 0:
            problems.append("costs must be two non-negative numbers")
        if grid.size < 2 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
            problems.append("price grid must hold at least two sorted, distinct, non-negative prices")
        elif len(costs) == 2 and grid[-1] <= max(costs):
            problems.append(f"top price {grid[-1]} must exceed every cost")
        if self.horizon < 1:
            problems.append("horizon must be positive")
        if self.tie_rule not in TIE_RULES:
            problems.append(f"tie rule must be one of {', '.join(TIE_RULES)}")
        if problems:
            raise ConfigError("Invalid market configuration", problems)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "price_grid", grid)

    @classmethod
    def uniform_grid(cls, costs: Sequence[float], k: int = 11, p_max: float = 1.0, horizon: int = 1000, **kwargs) -> "MarketConfig":
        return cls(tuple(costs), np.linspace(0.0, p_max, k), horizon, **kwargs)

    @property
    def k(self) -> int:
        return int(self.price_grid.size)

    @property
    def p_max(self) -> float:
        return float(self.price_grid[-1])


def buyer_choice(values: np.ndarray, prices: np.ndarray, tie_rule: str, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Vectorized buyer: returns -1 for no sale, else the index of the seller.

    Net values equal within TIE_TOL count as a tie.
    """
    net = np.atleast_2d(values) - np.atleast_2d(prices)
    choice = np.where(net[:, 1] > net[:, 0] + TIE_TOL, 1, 0)
    if tie_rule == "split":
        tied = np.abs(net[:, 0] - net[:, 1]) <= TIE_TOL
        coins = (rng if rng is not None else np.random.default_rng(0)).integers(0, 2, size=net.shape[0])
        choice = np.where(tied, coins, choice)
    best = net[np.arange(net.shape[0]), choice]
    return np.where(best > 0, choice, -1)


def _beats(config: MarketConfig, j: int, t: float) -> float:
    """P(v_other < t), with a tie at t weighted by the buyer's tie rule."""
    other = 1 - j
    if config.values.is_point(other) and abs(t - config.values.low[other]) <= TIE_TOL:
        if config.tie_rule == "split":
            return 0.5
        return 1.0 if j == 0 else 0.0
    return config.values.cdf(other, t)


def sale_probability(config: MarketConfig, j: int, prices: Tuple[float, float]) -> float:
    """Exact probability that seller j sells at these prices, by numerical integration over v_j."""
    own, rival = prices[j], prices[1 - j]
    lo, hi = config.values.low[j], config.values.high[j]

    def win(v: float) -> float:
        return _beats(config, j, v - own + rival)

    if config.values.is_point(j):
        return win(lo) if lo - own > TIE_TOL else 0.0
    start = max(lo, own)
    if start >= hi:
        return 0.0
    kink = [x for x in (config.values.low[1 - j] + own - rival, config.values.high[1 - j] + own - rival) if start < x < hi]
    value, _ = quad(win, start, hi, points=kink or None, limit=200)
    return float(value) / (hi - lo)


def profit_tables(config: MarketConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Expected stage profits pi_j[i1, i2] for every pair of grid prices."""
    k = config.k
    tables = np.zeros((2, k, k))
    for i1, p1 in enumerate(config.price_grid):
        for i2, p2 in enumerate(config.price_grid):
            for j, price in enumerate((p1, p2)):
                tables[j, i1, i2] = (price - config.costs[j]) * sale_probability(config, j, (p1, p2))
    return tables[0], tables[1]


COLLUSIVE_RULE = "max joint profit among pairs strictly improving both sellers on the competitive outcome"
JOINT_MAX_RULE = "max joint profit over all grid pairs"


@dataclass(frozen=True)
class CompetitiveBenchmark:
    competitive_prices: Tuple[float, float]
    competitive_profits: Tuple[float, float]
    converged: bool
    cycle: List[Tuple[float, float]]
    collusive_prices: Tuple[float, float]
    collusive_profits: Tuple[float, float]
    joint_max_prices: Tuple[float, float]
    joint_max_profits: Tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "competitive_prices": list(self.competitive_prices),
            "competitive_profits": list(self.competitive_profits),
            "converged": self.converged,
            "cycle": [list(pair) for pair in self.cycle],
            "collusive_rule": COLLUSIVE_RULE,
            "collusive_prices": list(self.collusive_prices),
            "collusive_profits": list(self.collusive_profits),
            "joint_max_rule": JOINT_MAX_RULE,
            "joint_max_prices": list(self.joint_max_prices),
            "joint_max_profits": list(self.joint_max_profits),
        }


def _best_response(profits: np.ndarray, current: int) -> int:
    top = profits.max()
    best = np.flatnonzero(profits >= top - 1e-12)
    return current if current in best else int(best[-1])


def competitive_benchmark(config: MarketConfig, max_iter: int = 1000) -> CompetitiveBenchmark:
    """
    Alternating best responses on expected stage profits.

    Starts from each seller's lowest grid price above its cost. On profit ties
    a seller keeps its current price if it is among the best, else takes the
    highest. A revisited state ends the iteration as a cycle whose prices and
    profits are averaged. The collusive reference maximizes joint profit
    among pairs that strictly improve both sellers on the competitive outcome.
    """
    pi1, pi2 = profit_tables(config)
    grid = config.price_grid
    start = []
    for cost in config.costs:
        above = np.flatnonzero(grid > cost)
        start.append(int(above[0]) if above.size else 0)
    state = (start[0], start[1])
    seen = {state: 0}
    history = [state]
    converged = False
    for step in range(1, max_iter + 1):
        i1 = _best_response(pi1[:, state[1]], state[0])
        i2 = _best_response(pi2[i1, :], state[1])
        nxt = (i1, i2)
        if nxt == state:
            converged = True
            break
        if nxt in seen:
            history = history[seen[nxt]:]
            break
        seen[nxt] = step
        history.append(nxt)
        state = nxt
    cycle_states = [state] if converged else history
    comp_prices = tuple(float(np.mean([grid[s[j]] for s in cycle_states])) for j in range(2))
    comp_profits = (float(np.mean([pi1[s] for s in cycle_states])), float(np.mean([pi2[s] for s in cycle_states])))
    if not converged:
        logging.warning(f"Best-response iteration cycles through {len(cycle_states)} states; averaging")

    joint = pi1 + pi2
    joint_max = np.unravel_index(int(np.argmax(joint)), joint.shape)
    improving = (pi1 > comp_profits[0] + 1e-12) & (pi2 > comp_profits[1] + 1e-12)
    if improving.any():
        masked = np.where(improving, joint, -np.inf)
        collusive = np.unravel_index(int(np.argmax(masked)), joint.shape)
    else:
        collusive = joint_max

    def prices(pair):
        return float(grid[pair[0]]), float(grid[pair[1]])

    def profits(pair):
        return float(pi1[pair]), float(pi2[pair])

    logging.info(f"Competitive prices {comp_prices}, collusive prices {prices(collusive)}")
    return CompetitiveBenchmark(
        comp_prices, comp_profits, converged, [prices(s) for s in cycle_states],
        prices(collusive), profits(collusive), prices(joint_max), profits(joint_max),
    )


class Seller(Protocol):
    def distribution(self) -> Optional[np.ndarray]: ...

    def act(self) -> int: ...

    def observe(self, sale: bool, profit: float) -> None: ...


class BanditSdaSeller:
    """
    Swap-regret learner over the price grid with partial feedback.

    The observed payoff is profit + cost, which lies in [0, p_max].
    """

    def __init__(self, config: MarketConfig, j: int, rng: np.random.Generator,
                 exploration: float = 0.1, epsilon: Optional[float] = None):
        self.cost = config.costs[j]
        k, p_max = config.k, config.p_max
        base = SdaLearner(k, epsilon, h=p_max * k / exploration, rng=rng, delegate_kind=LearnerKind.EW,
                          horizon=config.horizon, record=False)
        self.learner = BanditLearner(base, exploration, h=p_max, rng=rng, record=False)

    def distribution(self) -> np.ndarray:
        return self.learner.distribution()

    def act(self) -> int:
        return self.learner.act()

    def observe(self, sale: bool, profit: float) -> None:
        self.learner.observe(profit + self.cost)


class FixedPriceSeller:
    """Posts one price, exploring uniformly with the given probability."""

    def __init__(self, config: MarketConfig, price: float, rng: np.random.Generator, exploration: float = 0.0):
        self.index = _grid_index(config, price)
        self.rng = rng
        self.exploration = float(exploration)
        self.k = config.k

    def _target(self) -> int:
        return self.index

    def distribution(self) -> np.ndarray:
        probs = np.full(self.k, self.exploration / self.k)
        probs[self._target()] += 1.0 - self.exploration
        return probs

    def act(self) -> int:
        return int(self.rng.choice(self.k, p=self.distribution()))

    def observe(self, sale: bool, profit: float) -> None:
        pass


class GrimTriggerSeller(FixedPriceSeller):
    """
    Holds a high price until its sale rate over the last `window` rounds
    drops below `trigger_rate`, then posts the competitive price forever.
    """

    def __init__(self, config: MarketConfig, high_price: float, competitive_price: float, rng: np.random.Generator,
                 exploration: float = 0.0, window: int = 100, trigger_rate: float = 0.1):
        super().__init__(config, high_price, rng, exploration)
        self.competitive_index = _grid_index(config, competitive_price)
        self.window = int(window)
        self.trigger_rate = float(trigger_rate)
        self.recent: List[bool] = []
        self.triggered = False

    def _target(self) -> int:
        return self.competitive_index if self.triggered else self.index

    def observe(self, sale: bool, profit: float) -> None:
        if self.triggered:
            return
        self.recent.append(bool(sale))
        if len(self.recent) > self.window:
            self.recent.pop(0)
        if len(self.recent) == self.window and np.mean(self.recent) < self.trigger_rate:
            self.triggered = True
            logging.debug("Grim trigger fired; reverting to the competitive price")


def _grid_index(config: MarketConfig, price: float) -> int:
    matches = np.flatnonzero(np.abs(config.price_grid - price) <= 1e-9)
    if matches.size == 0:
        raise DomainError(f"Price {price} is not on the grid")
    return int(matches[0])


@dataclass(frozen=True)
class MarketLog:
    """
    Per-round market history. exploration[j] is seller j's n x k sampling
    distribution, NaN where the seller did not disclose one.
    """
    config: MarketConfig
    price_indices: np.ndarray
    sales: np.ndarray
    exploration: Tuple[np.ndarray, np.ndarray]
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        idx = np.array(self.price_indices, dtype=int)
        sales = np.array(self.sales, dtype=int)
        if idx.ndim != 2 or idx.shape[1] != 2 or sales.shape != idx.shape:
            raise DomainError("Market log needs n x 2 price indices and sale indicators")
        if np.any(idx < 0) or np.any(idx >= self.config.k):
            raise DomainError("Off-grid price index in market log")
        if np.any(sales.sum(axis=1) > 1) or np.any((sales != 0) & (sales != 1)):
            raise DomainError("At most one seller can sell per round")
        exploration = tuple(np.array(e, dtype=float).reshape(idx.shape[0], self.config.k) for e in self.exploration)
        object.__setattr__(self, "price_indices", idx)
        object.__setattr__(self, "sales", sales)
        object.__setattr__(self, "exploration", exploration)

    @property
    def n(self) -> int:
        return int(self.price_indices.shape[0])

    @property
    def prices(self) -> np.ndarray:
        return self.config.price_grid[self.price_indices]

    @property
    def profits(self) -> np.ndarray:
        return (self.prices - np.asarray(self.config.costs)) * self.sales

    def to_frame(self) -> pd.DataFrame:
        prices, profits = self.prices, self.profits
        frame = pd.DataFrame({
            "round": np.arange(1, self.n + 1),
            "p1": prices[:, 0], "p2": prices[:, 1],
            "sale1": self.sales[:, 0], "sale2": self.sales[:, 1],
            "profit1": profits[:, 0], "profit2": profits[:, 1],
        })
        for j in range(2):
            for a in range(self.config.k):
                frame[f"expl{j + 1}_{a + 1}"] = self.exploration[j][:, a]
        if self.values is not None:
            frame["v1"], frame["v2"] = self.values[:, 0], self.values[:, 1]
        return frame


def simulate_market(config: MarketConfig, sellers: Sequence[Seller], rng: np.random.Generator) -> MarketLog:
    """
    Runs config.horizon rounds. Each seller reports its sampling
    distribution, posts a price and then sees only its own sale and profit.
    """
    if len(sellers) != 2:
        raise DomainError(f"A duopoly needs two sellers, got {len(sellers)}")
    n, k = config.horizon, config.k
    values = config.values.sample(rng, n)
    idx = np.zeros((n, 2), dtype=int)
    sales = np.zeros((n, 2), dtype=int)
    exploration = (np.full((n, k), np.nan), np.full((n, k), np.nan))
    costs = np.asarray(config.costs)
    for i in range(n):
        for j, seller in enumerate(sellers):
            probs = seller.distribution()
            if probs is not None:
                exploration[j][i] = probs
            action = seller.act()
            if not 0 <= action < k:
                raise DomainError(f"Seller {j + 1} posted off-grid price index {action}")
            idx[i, j] = action
        prices = config.price_grid[idx[i]]
        buyer = int(buyer_choice(values[i], prices, config.tie_rule, rng)[0])
        if buyer >= 0:
            sales[i, buyer] = 1
        for j, seller in enumerate(sellers):
            seller.observe(bool(sales[i, j]), float((prices[j] - costs[j]) * sales[i, j]))
    logging.info(f"Market run: n={n}, mean prices {config.price_grid[idx].mean(axis=0).round(4).tolist()}, "
                 f"sale rates {sales.mean(axis=0).round(4).tolist()}")
    return MarketLog(config, idx, sales, exploration, values)


def write_market_csv(log: MarketLog, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    log.to_frame().to_csv(path, index=False, float_format="%.17g")
    return path


def read_market_csv(path: str, config: MarketConfig) -> MarketLog:
    """Rebuilds a log from CSV; exploration columns that are absent read as NaN."""
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = {"p1", "p2", "sale1", "sale2"} - set(frame.columns)
    if missing:
        raise DomainError(f"{path} is missing columns: {', '.join(sorted(missing))}")
    idx = np.column_stack([[_grid_index(config, p) for p in frame[col]] for col in ("p1", "p2")])
    exploration = []
    for j in (1, 2):
        cols = [f"expl{j}_{a}" for a in range(1, config.k + 1)]
        exploration.append(frame[cols].to_numpy() if set(cols) <= set(frame.columns) else np.full((len(frame), config.k), np.nan))
    values = frame[["v1", "v2"]].to_numpy() if {"v1", "v2"} <= set(frame.columns) else None
    return MarketLog(config, idx, frame[["sale1", "sale2"]].to_numpy(), tuple(exploration), values)


def market_config_from_dict(data: dict) -> MarketConfig:
    values = data.get("values", {})
    grid = data.get("price_grid")
    if grid is None:
        grid = np.linspace(0.0, float(data.get("p_max", 1.0)), int(data.get("k", 11)))
    return MarketConfig(
        tuple(data.get("costs", (0.1, 0.2))),
        np.asarray(grid, dtype=float),
        int(data.get("horizon", 1000)),
        ValueDistribution(tuple(values.get("low", (0.0, 0.0))), tuple(values.get("high", (1.0, 1.0)))),
        data.get("tie_rule", "lowest"),
    )


def seller_from_config(spec: dict, config: MarketConfig, j: int, rng: np.random.Generator,
                       benchmark: Optional[CompetitiveBenchmark] = None) -> Seller:
    """Seller types: bandit_sda, fixed, grim_trigger."""
    kind = spec.get("type", "bandit_sda")
    exploration = float(spec.get("exploration", 0.1))
    if kind == "bandit_sda":
        return BanditSdaSeller(config, j, rng, exploration, spec.get("epsilon"))
    if kind == "fixed":
        return FixedPriceSeller(config, float(spec["price"]), rng, exploration)
    if kind == "grim_trigger":
        competitive = spec.get("competitive_price")
        if competitive is None:
            benchmark = benchmark or competitive_benchmark(config)
            competitive = config.price_grid[int(np.argmin(np.abs(config.price_grid - benchmark.competitive_prices[j])))]
        return GrimTriggerSeller(config, float(spec["price"]), float(competitive), rng, exploration,
                                 int(spec.get("window", 100)), float(spec.get("trigger_rate", 0.1)))
    raise ConfigError(f"Unknown seller type '{kind}'")
