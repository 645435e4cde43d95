"""
Partial-feedback learning by reduction to full feedback.

Each round the wrapped learner recommends a distribution, the wrapper mixes
in uniform exploration, samples, observes only the played payoff and feeds
the inverse-propensity estimate of the whole vector back to the base.
Wrapping exponential weights gives the Exp3 variant.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Protocol, Union

import numpy as np

from errors import ConfigError, DomainError
from regret_core import ActionDistribution, PayoffStream, PlayLog, PlayLogBuilder, RegretReport, best_in_hindsight_regret, with_revealed_payoffs
from utils import ArrayLike, PayoffValidator


class FullFeedbackLearner(Protocol):
    k: int
    h: float

    def distribution(self) -> np.ndarray: ...

    def observe(self, payoff_vector: np.ndarray) -> None: ...


@dataclass(frozen=True)
class PropensityEstimate:
    """Inverse-probability estimate of a full payoff vector from one observed entry."""
    estimated_vector: np.ndarray
    played_action: int
    sampling_probs: ActionDistribution


def propensity_score(
    observed_payoff: float,
    played: int,
    probs: Union[ActionDistribution, ArrayLike],
    h: float = 1.0,
) -> PropensityEstimate:
    """
    Scales the observed payoff by the inverse of its sampling probability.

    Raises:
        DomainError: If the played action had zero probability or the payoff is out of range.
    """
    dist = probs if isinstance(probs, ActionDistribution) else ActionDistribution(np.asarray(probs, dtype=float))
    played = PayoffValidator.action(played, dist.k)
    PayoffValidator.payoffs([observed_payoff], h)
    prob = float(dist.probs[played])
    if prob <= 0.0:
        raise DomainError(f"Cannot reweight action {played}: it had zero sampling probability")
    estimate = np.zeros(dist.k)
    estimate[played] = observed_payoff / prob
    return PropensityEstimate(estimate, played, dist)


def _mix(recommended: np.ndarray, epsilon: float) -> np.ndarray:
    k = recommended.shape[0]
    return (1.0 - epsilon) * recommended + epsilon / k


def mix_exploration(recommended: Union[ActionDistribution, ArrayLike], epsilon: float, k: Optional[int] = None) -> ActionDistribution:
    """(1 - epsilon) * p + epsilon / k; every entry ends up at least epsilon / k."""
    PayoffValidator.epsilon(epsilon)
    probs = recommended.probs if isinstance(recommended, ActionDistribution) else PayoffValidator.distribution(recommended)
    if k is not None and probs.shape[0] != k:
        raise DomainError(f"Recommendation has {probs.shape[0]} actions, expected {k}")
    return ActionDistribution(_mix(probs, epsilon))


class HiddenPayoffStream:
    """
    A payoff oracle that answers only (round, action) queries.

    reveal() hands back the realized payoff matrix once play is over so the
    run can be scored against the best fixed action.
    """

    def __init__(self, stream: PayoffStream):
        self._stream = stream

    @property
    def n(self) -> int:
        return self._stream.n

    @property
    def k(self) -> int:
        return self._stream.k

    @property
    def h(self) -> float:
        return self._stream.h

    def payoff(self, round_index: int, action: int) -> float:
        return float(self._stream.matrix[round_index, action])

    def reveal(self) -> PayoffStream:
        return self._stream


def exp3_epsilon(k: int, n: int) -> float:
    """cube root of (k ln k / n), capped at 1."""
    return min(1.0, ((k * math.log(k)) / n) ** (1.0 / 3.0))


def exp3_regret_bound(k: int, n: int, h: float = 1.0) -> float:
    return 3.0 * h * ((k / n) * math.log(k)) ** (1.0 / 3.0)


class BanditLearner:
    """
    Turns a full-feedback learner into a bandit learner.

    The base must be configured with payoff ceiling h * k / exploration,
    the largest value a propensity estimate can take.
    """

    def __init__(
        self,
        base: FullFeedbackLearner,
        exploration: float,
        h: float = 1.0,
        rng: Optional[np.random.Generator] = None,
        record: bool = True,
    ):
        self.base = base
        self.exploration = PayoffValidator.epsilon(exploration, "exploration")
        self.h = PayoffValidator.ceiling(h)
        self.k = base.k
        required = self.h * self.k / self.exploration
        if base.h < required * (1.0 - 1e-12):
            raise ConfigError(f"Base learner ceiling {base.h} is below the estimate range {required}")
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._recommended: Optional[np.ndarray] = None
        self._probs: Optional[np.ndarray] = None
        self._action: Optional[int] = None
        self._builder = PlayLogBuilder(self.k, self.h, full_feedback=False) if record else None

    def distribution(self) -> np.ndarray:
        """The actual sampling probabilities for this round."""
        if self._probs is None:
            self._recommended = self.base.distribution()
            self._probs = _mix(self._recommended, self.exploration)
        return self._probs

    def act(self) -> int:
        self._action = int(self.rng.choice(self.k, p=self.distribution()))
        return self._action

    def observe(self, observed_payoff: float) -> None:
        if self._action is None:
            raise DomainError("observe() called before act()")
        probs = self._probs
        if not 0.0 <= observed_payoff <= self.h + PayoffValidator.SLACK:
            raise DomainError(f"Observed payoff {observed_payoff} outside [0, {self.h}]")
        estimate = np.zeros(self.k)
        estimate[self._action] = observed_payoff / probs[self._action]
        if self._builder is not None:
            self._builder.append(self._recommended, self._action, observed_payoff=observed_payoff, exploration_probs=probs)
        self.base.observe(estimate)
        self._recommended = self._probs = self._action = None

    def play_log(self) -> PlayLog:
        if self._builder is None:
            raise DomainError("This learner was created with record=False")
        return self._builder.build()


def bandit_run(
    base_learner: FullFeedbackLearner,
    payoff_stream: HiddenPayoffStream,
    epsilon: float,
    n: int,
    rng: np.random.Generator,
    h: Optional[float] = None,
) -> PlayLog:
    """
    Runs the reduction for n rounds against a hidden stream.

    The log keeps the base recommendation as the distribution and the mixed
    sampling probabilities as exploration_probs.
    """
    if n > payoff_stream.n:
        raise DomainError(f"Stream has only {payoff_stream.n} rounds, asked for {n}")
    if payoff_stream.k != base_learner.k:
        raise DomainError(f"Stream has {payoff_stream.k} actions, learner has {base_learner.k}")
    learner = BanditLearner(base_learner, epsilon, payoff_stream.h if h is None else h, rng)
    for i in range(n):
        action = learner.act()
        learner.observe(payoff_stream.payoff(i, action))
    log = learner.play_log()
    logging.info(f"Bandit run finished: n={n}, k={learner.k}, exploration={epsilon:.4f}")
    return log


def bandit_regret(log: PlayLog, payoff_stream: HiddenPayoffStream, use_distributions: bool = True) -> RegretReport:
    """Best-in-hindsight regret of a bandit log against the revealed payoffs."""
    matrix = payoff_stream.reveal().matrix[: log.n]
    return best_in_hindsight_regret(with_revealed_payoffs(log, matrix), use_distributions)
