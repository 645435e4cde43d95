"""
Shared numeric types and the regret calculators.

Every learner, harness and auditor in the toolkit produces or consumes a
PlayLog; the functions at the bottom of this module turn one into a
RegretReport against either the best fixed action or the best swap map.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from errors import BanditLogError, DomainError
from utils import ArrayLike, PayoffValidator


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _as_matrix(values, n: int, k: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.size != n * k:
        raise DomainError(f"{name} must be {n} x {k}, got shape {arr.shape}")
    return arr.reshape(n, k)


@dataclass(frozen=True)
class PayoffVector:
    """Payoffs of the k actions in one round, each in [0, h]."""
    entries: np.ndarray
    h: float = 1.0

    def __post_init__(self):
        h = PayoffValidator.ceiling(self.h)
        entries = PayoffValidator.payoffs(self.entries, h)
        if entries.ndim != 1:
            raise DomainError(f"PayoffVector needs a 1-D vector, got shape {entries.shape}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def k(self) -> int:
        return int(self.entries.shape[0])


@dataclass(frozen=True)
class ActionDistribution:
    """Probability vector over k actions."""
    probs: np.ndarray

    def __post_init__(self):
        probs = PayoffValidator.distribution(self.probs)
        if probs.ndim != 1:
            raise DomainError(f"ActionDistribution needs a 1-D vector, got shape {probs.shape}")
        object.__setattr__(self, "probs", _frozen(probs))

    @classmethod
    def uniform(cls, k: int) -> "ActionDistribution":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, action: int) -> "ActionDistribution":
        probs = np.zeros(k)
        probs[PayoffValidator.action(action, k)] = 1.0
        return cls(probs)

    @property
    def k(self) -> int:
        return int(self.probs.shape[0])

    def sample(self, rng: np.random.Generator) -> int:
        """Draws one action index with the injected generator."""
        return int(rng.choice(self.k, p=self.probs))


@dataclass(frozen=True)
class PayoffStream:
    """An n x k payoff matrix known in advance (oblivious adversary or offline data)."""
    matrix: np.ndarray
    h: float = 1.0

    def __post_init__(self):
        h = PayoffValidator.ceiling(self.h)
        matrix = PayoffValidator.payoffs(self.matrix, h)
        if matrix.ndim != 2 or matrix.shape[0] < 1:
            raise DomainError(f"PayoffStream needs an n x k matrix with n >= 1, got shape {matrix.shape}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def k(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return self.n

    def vector(self, round_index: int) -> PayoffVector:
        return PayoffVector(self.matrix[round_index], self.h)

    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


@dataclass(frozen=True)
class RoundRecord:
    distribution: ActionDistribution
    action: int
    payoff_vector: Optional[PayoffVector]
    observed_payoff: float
    exploration_probs: Optional[ActionDistribution] = None


@dataclass(frozen=True)
class PlayLog:
    """
    Per-round record of a learner's play, stored column-wise.

    Full-feedback logs carry the complete n x k payoff matrix; bandit logs
    carry only the observed payoff of the played action plus the sampling
    probabilities that produced it.
    """
    distributions: np.ndarray
    actions: np.ndarray
    observed: np.ndarray
    h: float = 1.0
    payoffs: Optional[np.ndarray] = None
    exploration_probs: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None

    def __post_init__(self):
        h = PayoffValidator.ceiling(self.h)
        dists = np.array(self.distributions, dtype=float)
        if dists.ndim != 2:
            raise DomainError(f"Distributions must be an n x k matrix, got shape {dists.shape}")
        n, k = dists.shape
        if n:
            PayoffValidator.distribution(dists)
        actions = np.array(self.actions, dtype=np.int64).reshape(-1)
        observed = np.array(self.observed, dtype=float).reshape(-1)
        if actions.shape[0] != n or observed.shape[0] != n:
            raise DomainError(f"Record count mismatch: {n} distributions, {actions.shape[0]} actions, {observed.shape[0]} payoffs")
        if n and (actions.min() < 0 or actions.max() >= k):
            raise DomainError(f"Action index outside [0, {k})")
        if n:
            PayoffValidator.payoffs(observed, h)
        payoffs = None
        if self.payoffs is not None:
            payoffs = PayoffValidator.payoffs(_as_matrix(self.payoffs, n, k, "Payoff matrix"), h, k)
            if n and not np.array_equal(payoffs[np.arange(n), actions], observed):
                raise DomainError("Observed payoffs disagree with the payoff matrix")
        expl = None
        if self.exploration_probs is not None:
            expl = _as_matrix(self.exploration_probs, n, k, "Exploration probabilities")
            if n:
                PayoffValidator.distribution(expl, k)
        residuals = None
        if self.residuals is not None:
            residuals = np.array(self.residuals, dtype=float).reshape(-1)
            if residuals.shape[0] != n:
                raise DomainError("Residual column length must equal the record count")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "distributions", _frozen(dists))
        object.__setattr__(self, "actions", _frozen(actions))
        object.__setattr__(self, "observed", _frozen(observed))
        object.__setattr__(self, "payoffs", None if payoffs is None else _frozen(payoffs))
        object.__setattr__(self, "exploration_probs", None if expl is None else _frozen(expl))
        object.__setattr__(self, "residuals", None if residuals is None else _frozen(residuals))

    @property
    def n(self) -> int:
        return int(self.distributions.shape[0])

    @property
    def k(self) -> int:
        return int(self.distributions.shape[1])

    @property
    def is_bandit(self) -> bool:
        return self.payoffs is None

    def __len__(self) -> int:
        return self.n

    @property
    def rounds(self) -> List[RoundRecord]:
        records = []
        for i in range(self.n):
            records.append(RoundRecord(
                distribution=ActionDistribution(self.distributions[i]),
                action=int(self.actions[i]),
                payoff_vector=None if self.payoffs is None else PayoffVector(self.payoffs[i], self.h),
                observed_payoff=float(self.observed[i]),
                exploration_probs=None if self.exploration_probs is None else ActionDistribution(self.exploration_probs[i]),
            ))
        return records

    def realized_weights(self) -> np.ndarray:
        """One-hot n x k matrix of the realized actions."""
        weights = np.zeros((self.n, self.k))
        weights[np.arange(self.n), self.actions] = 1.0
        return weights

    def slice(self, start: int, stop: int) -> "PlayLog":
        def cut(arr):
            return None if arr is None else arr[start:stop]
        return PlayLog(self.distributions[start:stop], self.actions[start:stop], self.observed[start:stop],
                       self.h, cut(self.payoffs), cut(self.exploration_probs), cut(self.residuals))


class PlayLogBuilder:
    """Accumulates rounds and freezes them into a PlayLog."""

    def __init__(self, k: int, h: float = 1.0, full_feedback: bool = True):
        self.k = k
        self.h = h
        self.full_feedback = full_feedback
        self._distributions: List[np.ndarray] = []
        self._actions: List[int] = []
        self._observed: List[float] = []
        self._payoffs: List[np.ndarray] = []
        self._exploration: List[np.ndarray] = []
        self._residuals: List[float] = []

    def __len__(self) -> int:
        return len(self._actions)

    def append(
        self,
        distribution: Union[ActionDistribution, np.ndarray],
        action: int,
        payoff_vector: Optional[Union[PayoffVector, np.ndarray]] = None,
        observed_payoff: Optional[float] = None,
        exploration_probs: Optional[Union[ActionDistribution, np.ndarray]] = None,
        residual: Optional[float] = None,
    ) -> None:
        probs = distribution.probs if isinstance(distribution, ActionDistribution) else np.asarray(distribution, dtype=float)
        self._distributions.append(probs)
        self._actions.append(int(action))
        if self.full_feedback:
            if payoff_vector is None:
                raise DomainError("Full-feedback rounds need the whole payoff vector")
            entries = payoff_vector.entries if isinstance(payoff_vector, PayoffVector) else np.asarray(payoff_vector, dtype=float)
            self._payoffs.append(entries)
            observed_payoff = float(entries[int(action)])
        elif observed_payoff is None:
            raise DomainError("Bandit rounds need the observed payoff")
        self._observed.append(float(observed_payoff))
        if exploration_probs is not None:
            self._exploration.append(exploration_probs.probs if isinstance(exploration_probs, ActionDistribution) else np.asarray(exploration_probs, dtype=float))
        if residual is not None:
            self._residuals.append(float(residual))

    def build(self) -> PlayLog:
        n = len(self._actions)
        if self._exploration and len(self._exploration) != n:
            raise DomainError("Exploration probabilities must be logged for every round or none")
        if self._residuals and len(self._residuals) != n:
            raise DomainError("Residuals must be logged for every round or none")
        return PlayLog(
            distributions=np.array(self._distributions, dtype=float).reshape(n, self.k),
            actions=np.array(self._actions, dtype=np.int64),
            observed=np.array(self._observed, dtype=float),
            h=self.h,
            payoffs=np.array(self._payoffs, dtype=float).reshape(n, self.k) if self.full_feedback else None,
            exploration_probs=np.array(self._exploration, dtype=float).reshape(n, self.k) if self._exploration else None,
            residuals=np.array(self._residuals, dtype=float) if self._residuals else None,
        )


@dataclass(frozen=True)
class RegretReport:
    """total_regret = benchmark_payoff - algorithm_payoff; per_round_regret = total / n."""
    total_regret: float
    per_round_regret: float
    best_action_or_swap: Union[int, Tuple[int, ...]]
    algorithm_payoff: float
    benchmark_payoff: float
    n: int
    use_distributions: bool = True

    def to_dict(self) -> dict:
        deviation = self.best_action_or_swap
        return {
            "total_regret": self.total_regret,
            "per_round_regret": self.per_round_regret,
            "deviation": list(deviation) if isinstance(deviation, tuple) else deviation,
            "algorithm_payoff": self.algorithm_payoff,
            "benchmark_payoff": self.benchmark_payoff,
            "n": self.n,
            "use_distributions": self.use_distributions,
        }


def _require_full_feedback(log: PlayLog) -> None:
    if log.n == 0:
        raise DomainError("Regret is undefined on an empty log")
    if log.payoffs is None:
        raise BanditLogError()


def _weights(log: PlayLog, use_distributions: bool) -> np.ndarray:
    return log.distributions if use_distributions else log.realized_weights()


def _report(benchmark: float, algorithm: float, deviation, n: int, use_distributions: bool) -> RegretReport:
    total = float(benchmark - algorithm)
    return RegretReport(
        total_regret=total,
        per_round_regret=total / n,
        best_action_or_swap=deviation,
        algorithm_payoff=float(algorithm),
        benchmark_payoff=float(benchmark),
        n=n,
        use_distributions=use_distributions,
    )


def best_in_hindsight_regret(log: PlayLog, use_distributions: bool = True) -> RegretReport:
    """
    Regret against the best fixed action in hindsight.

    Args:
        log: A full-feedback PlayLog.
        use_distributions: Score the algorithm by its mixed strategies
            (expected payoff) instead of its realized actions.

    Returns:
        RegretReport: The deviation descriptor is the best action (lowest index on ties).
    """
    _require_full_feedback(log)
    totals = log.payoffs.sum(axis=0)
    best = int(np.argmax(totals))
    algorithm = float(np.sum(_weights(log, use_distributions) * log.payoffs))
    return _report(float(totals[best]), algorithm, best, log.n, use_distributions)


def swap_matrix(log: PlayLog, use_distributions: bool = True) -> np.ndarray:
    """k x k matrix whose entry (a, a') is the payoff of playing a' whenever a was (weighted)."""
    _require_full_feedback(log)
    return _weights(log, use_distributions).T @ log.payoffs


def swap_regret(log: PlayLog, use_distributions: bool = True) -> RegretReport:
    """
    Regret against the best swap function f: actions -> actions.

    The optimal remapping is chosen per source action independently; the
    report carries it as a tuple f with f[a] the replacement for a.
    """
    gains = swap_matrix(log, use_distributions)
    swap = tuple(int(a) for a in np.argmax(gains, axis=1))
    benchmark = float(gains[np.arange(log.k), list(swap)].sum())
    algorithm = float(np.trace(gains))
    logging.debug(f"Swap map {swap} over {log.n} rounds")
    return _report(benchmark, algorithm, swap, log.n, use_distributions)


def regret_curve(log: PlayLog, use_distributions: bool = True) -> pd.DataFrame:
    """Cumulative algorithm payoff, best-fixed-action payoff and regret after every round."""
    _require_full_feedback(log)
    alg = np.cumsum(np.sum(_weights(log, use_distributions) * log.payoffs, axis=1))
    opt = np.max(np.cumsum(log.payoffs, axis=0), axis=1)
    return pd.DataFrame({
        "round": np.arange(1, log.n + 1),
        "alg_payoff": alg,
        "opt_payoff": opt,
        "regret": opt - alg,
    })


def with_revealed_payoffs(log: PlayLog, matrix: ArrayLike) -> PlayLog:
    """
    Turns a bandit log into a full-feedback evaluation log.

    The sampling probabilities become the distributions, so distribution-mode
    regret scores what the bandit learner actually played.
    """
    matrix = PayoffValidator.payoffs(matrix, log.h, log.k)
    if matrix.ndim != 2 or matrix.shape[0] != log.n:
        raise DomainError(f"Revealed matrix must have {log.n} rows, got shape {matrix.shape}")
    if not np.array_equal(matrix[np.arange(log.n), log.actions], log.observed):
        raise DomainError("Revealed payoffs disagree with the observed ones")
    played = log.exploration_probs if log.exploration_probs is not None else log.distributions
    return PlayLog(played, log.actions, log.observed, log.h, matrix, log.exploration_probs, log.residuals)
