"""
Stationary Delegation: k delegated best-in-hindsight learners whose
recommendations are combined through the stationary distribution of the
matrix they form. Delegate a is credited with alpha_a * v each round, which
turns k external-regret guarantees into one swap-regret guarantee.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import softmax

from codes import LearnerKind
from errors import ConfigError, DomainError, SolverError
from online_learners import LearnerState, STEP_RULES, default_epsilon, ftpl_hallucinate, learner_update
from regret_core import ActionDistribution, PayoffVector, PlayLog, PlayLogBuilder
from utils import PayoffValidator

POWER_ITERATION_LIMIT = 200000


@dataclass(frozen=True)
class RecommendationMatrix:
    """Row a is the distribution recommended by delegate a."""
    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.shape[0] < 1:
            raise DomainError(f"Recommendation matrix must be square, got shape {rows.shape}")
        PayoffValidator.distribution(rows)
        object.__setattr__(self, "rows", rows)

    @property
    def k(self) -> int:
        return int(self.rows.shape[0])


def stationary_residual(alpha: np.ndarray, rows: np.ndarray) -> float:
    return float(np.max(np.abs(alpha @ rows - alpha)))


def _power_iteration(rows: np.ndarray, tol: float) -> np.ndarray:
    k = rows.shape[0]
    lazy = 0.5 * (rows + np.eye(k))
    alpha = np.full(k, 1.0 / k)
    residual = stationary_residual(alpha, rows)
    for _ in range(POWER_ITERATION_LIMIT):
        if residual <= tol:
            return alpha
        alpha = alpha @ lazy
        alpha /= alpha.sum()
        residual = stationary_residual(alpha, rows)
    logging.error(f"Power iteration stalled at residual {residual:.3e}")
    raise SolverError("Stationary distribution did not converge", residual)


def _solve_stationary(rows: np.ndarray, tol: float) -> np.ndarray:
    k = rows.shape[0]
    if k == 1:
        return np.ones(1)
    system = rows.T - np.eye(k)
    system[-1, :] = 1.0
    rhs = np.zeros(k)
    rhs[-1] = 1.0
    try:
        alpha = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        logging.debug("Stationary system is singular; several stationary distributions exist")
        return _power_iteration(rows, tol)
    if np.any(alpha < -tol) or not np.all(np.isfinite(alpha)):
        logging.warning("Direct stationary solve was ill-conditioned; using power iteration")
        return _power_iteration(rows, tol)
    alpha = np.clip(alpha, 0.0, None)
    alpha /= alpha.sum()
    if stationary_residual(alpha, rows) > tol:
        logging.warning("Direct stationary solve missed the tolerance; using power iteration")
        return _power_iteration(rows, tol)
    return alpha


def stationary_distribution(m: Union[RecommendationMatrix, np.ndarray], tol: float = 1e-10) -> ActionDistribution:
    """
    Returns alpha with alpha @ M = alpha to within tol in the max norm.

    The direct solve covers chains with a unique stationary distribution.
    When there are several, lazy power iteration from the uniform vector
    picks one deterministically.
    """
    matrix = m if isinstance(m, RecommendationMatrix) else RecommendationMatrix(m)
    return ActionDistribution(_solve_stationary(matrix.rows, tol))


@dataclass(frozen=True)
class SdaState:
    delegates: Tuple[LearnerState, ...]
    last_stationary: ActionDistribution
    delegate_kind: LearnerKind = LearnerKind.EW

    def __post_init__(self):
        k = len(self.delegates)
        if k < 1 or any(d.k != k for d in self.delegates):
            raise DomainError("Stationary delegation needs exactly k delegates over k actions")

    @classmethod
    def initial(cls, k: int, epsilon: float = 1.0, h: float = 1.0, delegate_kind: Union[LearnerKind, str] = LearnerKind.EW) -> "SdaState":
        delegates = tuple(LearnerState.initial(k, epsilon, h) for _ in range(k))
        return cls(delegates, ActionDistribution.uniform(k), LearnerKind(delegate_kind))

    @property
    def k(self) -> int:
        return len(self.delegates)


def recommendation_matrix(state: SdaState) -> RecommendationMatrix:
    rule = STEP_RULES[state.delegate_kind]
    return RecommendationMatrix(np.vstack([rule(d) for d in state.delegates]))


def sda_step(state: SdaState, rng: np.random.Generator) -> Tuple[ActionDistribution, int, int]:
    """
    Picks delegate a with probability alpha_a, then an action from row a.

    Returns:
        (stationary distribution, sampled action, delegate used)
    """
    rows = recommendation_matrix(state).rows
    alpha = _solve_stationary(rows, 1e-10)
    delegate = int(rng.choice(alpha.size, p=alpha))
    action = int(rng.choice(rows.shape[1], p=rows[delegate]))
    return ActionDistribution(alpha), action, delegate


def sda_update(state: SdaState, payoff_vector: Union[PayoffVector, np.ndarray], stationary: Optional[ActionDistribution] = None) -> SdaState:
    """Credits delegate a with alpha_a * v, alpha the round's stationary distribution."""
    entries = payoff_vector.entries if isinstance(payoff_vector, PayoffVector) else np.asarray(payoff_vector, dtype=float)
    if entries.shape != (state.k,):
        raise DomainError(f"Payoff vector has length {entries.shape[0] if entries.ndim else 0}, expected {state.k}")
    if stationary is None:
        stationary = stationary_distribution(recommendation_matrix(state))
    alpha = stationary.probs
    delegates = tuple(learner_update(d, alpha[a] * entries) for a, d in enumerate(state.delegates))
    return replace(state, delegates=delegates, last_stationary=stationary)


def sda_swap_regret_bound(k: int, n: int, h: float = 1.0) -> float:
    return 2.0 * k * h * math.sqrt(math.log(k) / n)


class SdaLearner:
    """
    Stateful stationary-delegation learner.

    With exponential-weights delegates the k x k score table is updated in
    one vectorized step. The per-round stationary residual is kept in the
    log's diagnostics column.
    """

    def __init__(
        self,
        k: int,
        epsilon: Optional[float] = None,
        h: float = 1.0,
        rng: Optional[np.random.Generator] = None,
        delegate_kind: Union[LearnerKind, str] = LearnerKind.EW,
        horizon: Optional[int] = None,
        record: bool = True,
        tol: float = 1e-10,
    ):
        if k < 1:
            raise ConfigError(f"Learner needs at least one action, got k={k}")
        self.delegate_kind = LearnerKind(delegate_kind)
        if self.delegate_kind not in STEP_RULES:
            raise ConfigError(f"Delegates must be full-feedback learners, got {self.delegate_kind.value}")
        if epsilon is None:
            epsilon = default_epsilon(self.delegate_kind, k, horizon) if horizon else 1.0
        self.k = k
        self.h = PayoffValidator.ceiling(h)
        self.epsilon = PayoffValidator.epsilon(epsilon)
        self.tol = tol
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.scores = np.zeros((k, k))
        self._rate = math.log1p(self.epsilon) / self.h
        self._rows: Optional[np.ndarray] = None
        self._alpha: Optional[np.ndarray] = None
        self._action: Optional[int] = None
        self.last_delegate: Optional[int] = None
        self._builder = PlayLogBuilder(k, self.h) if record else None

    def recommendations(self) -> np.ndarray:
        if self.delegate_kind == LearnerKind.EW:
            return softmax(self.scores * self._rate, axis=1)
        rule = STEP_RULES[self.delegate_kind]
        rows = []
        for a in range(self.k):
            hallucinations = None
            if self.delegate_kind == LearnerKind.FTPL:
                hallucinations = ftpl_hallucinate(self.epsilon, self.h, self.k, self.rng, True).values
            rows.append(rule(LearnerState(self.scores[a], self.epsilon, self.h, 0, hallucinations)))
        return np.vstack(rows)

    def distribution(self) -> np.ndarray:
        if self._alpha is None:
            self._rows = self.recommendations()
            self._alpha = _solve_stationary(self._rows, self.tol)
        return self._alpha

    def act(self) -> int:
        alpha = self.distribution()
        self.last_delegate = int(self.rng.choice(alpha.size, p=alpha))
        self._action = int(self.rng.choice(self._rows.shape[1], p=self._rows[self.last_delegate]))
        return self._action

    def observe(self, payoff_vector: Union[PayoffVector, np.ndarray]) -> None:
        entries = payoff_vector.entries if isinstance(payoff_vector, PayoffVector) else np.asarray(payoff_vector, dtype=float)
        if entries.shape != (self.k,):
            raise DomainError(f"Payoff vector has length {entries.shape}, expected {self.k}")
        alpha = self.distribution()
        if self._builder is not None:
            action = self._action if self._action is not None else int(np.argmax(alpha))
            self._builder.append(alpha, action, entries, residual=stationary_residual(alpha, self._rows))
        self.scores += np.outer(alpha, entries)
        self._rows = self._alpha = self._action = None

    def play_log(self) -> PlayLog:
        if self._builder is None:
            raise DomainError("This learner was created with record=False")
        return self._builder.build()
