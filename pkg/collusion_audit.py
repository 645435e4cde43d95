"""
Swap-regret audit of a seller's pricing from its own market log.

The seller's randomization makes its counterfactual sales estimable: a sale
at price a' in a round where a' was posted, divided by the probability of
posting a', is unbiased for whether it would have sold at a'. Swap regret is
then measured in the weights of the seller's own sampling distribution and
minimized over candidate costs, since the auditor need not know the cost.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from codes import Verdict
from errors import ConfigError, NotAuditableError
from market_simulator import MarketLog, buyer_choice

REGRET_KINDS = ("swap", "external")
DECISION_RULES = ("point", "lower_bound")
PROBABILITY_SLACK = 1e-12


@dataclass(frozen=True)
class AuditParams:
    alpha_min: float
    r_bar: float
    delta: float
    cost_grid_size: int = 101
    known_cost: Optional[float] = None
    regret_kind: str = "swap"
    radius_constant: float = 1.0
    threshold_factor: float = 1.5
    decision_rule: str = "point"

    def __post_init__(self):
        problems = []
        if not 0 < self.alpha_min <= 1:
            problems.append("alpha_min must lie in (0, 1]")
        if self.r_bar <= 0:
            problems.append("r_bar must be positive")
        if not 0 < self.delta < 1:
            problems.append("delta must lie in (0, 1)")
        if self.cost_grid_size < 2:
            problems.append("cost grid needs at least two points")
        if self.regret_kind not in REGRET_KINDS:
            problems.append(f"regret_kind must be one of {', '.join(REGRET_KINDS)}")
        if self.decision_rule not in DECISION_RULES:
            problems.append(f"decision_rule must be one of {', '.join(DECISION_RULES)}")
        if self.known_cost is not None and self.known_cost < 0:
            problems.append("known_cost must be non-negative")
        if problems:
            raise ConfigError("Invalid audit parameters", problems)

    @property
    def threshold(self) -> float:
        return self.threshold_factor * self.r_bar


@dataclass(frozen=True)
class AuditReport:
    r_swap: float
    cost_hat: float
    radius: float
    verdict: Verdict
    threshold: float
    underpowered: bool
    swap_map: Tuple[int, ...]
    regret_by_cost: np.ndarray = field(repr=False)
    cost_grid: np.ndarray = field(repr=False)
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def to_dict(self) -> dict:
        return {
            "r_swap": self.r_swap,
            "cost_hat": self.cost_hat,
            "radius": self.radius,
            "verdict": self.verdict.value,
            "threshold": self.threshold,
            "underpowered": self.underpowered,
            "swap_map": list(self.swap_map),
            "parameters": self.parameters,
        }


def required_rounds(k: int, p_max: float, alpha_min: float, r_bar: float, delta: float, constant: float) -> int:
    """constant * ((k * p_max) / (alpha_min * r_bar))^2 * ln(k / delta), rounded up."""
    return int(math.ceil(constant * ((k * p_max) / (alpha_min * r_bar)) ** 2 * math.log(k / delta)))


def decide(r_hat: float, radius: float, threshold: float, rule: str = "point") -> Verdict:
    """
    Pass/fail from the estimate and its radius.

    "point" passes iff r_hat <= threshold. "lower_bound" fails only when the
    whole confidence interval sits above the threshold, i.e. passes iff
    r_hat - radius <= threshold.
    """
    if rule not in DECISION_RULES:
        raise ConfigError(f"Unknown decision rule '{rule}'", [f"valid: {', '.join(DECISION_RULES)}"])
    statistic = r_hat - radius if rule == "lower_bound" else r_hat
    return Verdict.PASS if statistic <= threshold else Verdict.FAIL


def _auditable_probs(log: MarketLog, j: int, alpha_min: float) -> np.ndarray:
    probs = log.exploration[j]
    if not np.all(np.isfinite(probs)):
        raise NotAuditableError(f"Seller {j + 1} did not log its exploration probabilities")
    lowest = float(probs.min())
    if lowest < alpha_min - PROBABILITY_SLACK:
        raise NotAuditableError(f"Seller {j + 1} explored some price with probability {lowest:.3g} < alpha_min={alpha_min}")
    return probs


def estimated_sales(log: MarketLog, j: int, probs: Optional[np.ndarray] = None) -> np.ndarray:
    """n x k inverse-propensity estimates of the sale indicator at every grid price."""
    probs = log.exploration[j] if probs is None else probs
    n = log.n
    played = log.price_indices[:, j]
    estimates = np.zeros((n, log.config.k))
    estimates[np.arange(n), played] = log.sales[:, j] / probs[np.arange(n), played]
    return estimates


def counterfactual_sales(log: MarketLog, j: int) -> np.ndarray:
    """n x k true sale indicators at every grid price, recomputed from the logged buyer values."""
    if log.values is None:
        raise NotAuditableError("Ground-truth counterfactuals need the logged buyer values")
    grid = log.config.price_grid
    prices = log.prices
    out = np.zeros((log.n, grid.size))
    rng = np.random.default_rng(0)
    for a, price in enumerate(grid):
        swapped = prices.copy()
        swapped[:, j] = price
        out[:, a] = buyer_choice(log.values, swapped, log.config.tie_rule, rng) == j
    return out


def _gain_terms(probs: np.ndarray, sales_hat: np.ndarray, margins: np.ndarray) -> np.ndarray:
    """Per-round X_i[a, a'] = pi_i(a) * (s_i(a') m(a') - s_i(a) m(a)) for profit margins m."""
    profit = sales_hat * margins[None, :]
    return probs[:, :, None] * (profit[:, None, :] - profit[:, :, None])


def _regret_at(probs: np.ndarray, sales_hat: np.ndarray, grid: np.ndarray, cost: float, kind: str) -> Tuple[float, np.ndarray]:
    n = probs.shape[0]
    weighted = probs.T @ sales_hat / n  # S[a, a'] = mean_i pi_i(a) s_i(a')
    margins = grid - cost
    own = np.diag(weighted) * margins
    if kind == "external":
        totals = weighted.sum(axis=0) * margins
        best = int(np.argmax(totals))
        return float(totals[best] - own.sum()), np.full(grid.size, best)
    gains = weighted * margins[None, :] - own[:, None]
    swap = np.argmax(gains, axis=1)
    return float(np.sum(gains[np.arange(grid.size), swap])), swap


def audit_swap_regret(log: MarketLog, j: int, params: AuditParams) -> AuditReport:
    """
    Estimates the seller's minimum rationalizable swap regret and decides.

    The radius is a union bound over the k^2 (played, alternative) pairs
    using the empirical spread of the per-round gain terms. Under the
    "point" rule the audit passes iff the estimate is at most
    threshold_factor * r_bar and the radius only flags underpowered audits;
    under "lower_bound" the estimate minus the radius is compared instead.

    Raises:
        NotAuditableError: If exploration probabilities are missing or below alpha_min.
    """
    if j not in (0, 1):
        raise ConfigError(f"Seller index must be 0 or 1, got {j}")
    probs = _auditable_probs(log, j, params.alpha_min)
    grid = log.config.price_grid
    k, n = grid.size, log.n
    sales_hat = estimated_sales(log, j, probs)
    if params.known_cost is not None:
        costs = np.array([float(params.known_cost)])
    else:
        costs = np.linspace(0.0, log.config.p_max, params.cost_grid_size)
    regrets = np.empty(costs.size)
    swaps = []
    for index, cost in enumerate(costs):
        regrets[index], swap = _regret_at(probs, sales_hat, grid, cost, params.regret_kind)
        swaps.append(swap)
    best = int(np.argmin(regrets))
    cost_hat, r_hat = float(costs[best]), float(regrets[best])

    terms = _gain_terms(probs, sales_hat, grid - cost_hat)
    spread = terms.std(axis=0, ddof=1) if n > 1 else np.zeros((k, k))
    radius = params.radius_constant * math.sqrt(2.0 * math.log(2.0 * k * k / params.delta)) * float(spread.max(axis=1).sum()) / math.sqrt(n)
    verdict = decide(r_hat, radius, params.threshold, params.decision_rule)
    underpowered = radius > params.r_bar / 2.0
    if underpowered:
        logging.warning(f"Audit radius {radius:.4f} exceeds r_bar/2={params.r_bar / 2:.4f}; the log is too short to separate")
    logging.info(f"Audit seller {j + 1}: r_{params.regret_kind}={r_hat:.5f} at cost {cost_hat:.3f}, "
                 f"radius={radius:.5f}, verdict={verdict.value}")
    parameters = {
        "k": k, "p_max": log.config.p_max, "alpha_min": params.alpha_min, "r_bar": params.r_bar,
        "delta": params.delta, "n": n, "regret_kind": params.regret_kind, "known_cost": params.known_cost,
        "decision_rule": params.decision_rule,
    }
    return AuditReport(r_hat, cost_hat, radius, verdict, params.threshold, underpowered,
                       tuple(int(s) for s in swaps[best]), regrets, costs, parameters)
