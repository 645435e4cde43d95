"""
Full-feedback learners behind one step interface.

The pure pair learner_step / learner_update works on immutable LearnerState
values; Learner wraps them with an injected generator and records its own
PlayLog so harnesses only call act() and observe().
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import softmax

from codes import LearnerKind
from errors import ConfigError, DomainError
from regret_core import ActionDistribution, PayoffStream, PayoffVector, PlayLog, PlayLogBuilder
from utils import PayoffValidator


@dataclass(frozen=True)
class LearnerState:
    """Cumulative scores U^{i-1}, the rate, the ceiling and optional FTPL hallucinations."""
    cumulative_scores: np.ndarray
    epsilon: float = 1.0
    h: float = 1.0
    round_index: int = 0
    hallucinations: Optional[np.ndarray] = None

    def __post_init__(self):
        PayoffValidator.epsilon(self.epsilon)
        PayoffValidator.ceiling(self.h)
        scores = np.array(self.cumulative_scores, dtype=float)
        if scores.ndim != 1 or scores.shape[0] < 1:
            raise DomainError(f"Scores must be a non-empty vector, got shape {scores.shape}")
        object.__setattr__(self, "cumulative_scores", scores)
        if self.hallucinations is not None:
            hallucinations = np.array(self.hallucinations, dtype=float)
            if hallucinations.shape != scores.shape or np.any(hallucinations < 0):
                raise DomainError("Hallucinations must be k non-negative payoffs")
            object.__setattr__(self, "hallucinations", hallucinations)

    @classmethod
    def initial(cls, k: int, epsilon: float = 1.0, h: float = 1.0, hallucinations: Optional[np.ndarray] = None) -> "LearnerState":
        return cls(np.zeros(k), epsilon, h, 0, hallucinations)

    @property
    def k(self) -> int:
        return int(self.cumulative_scores.shape[0])


@dataclass(frozen=True)
class Perturbation:
    """FTPL hallucinated payoffs h * Z_a and whether the harness redraws them each round."""
    values: np.ndarray
    rerandomize_each_round: bool = False


def _point_mass(k: int, action: int) -> np.ndarray:
    probs = np.zeros(k)
    probs[action] = 1.0
    return probs


def _ftl_probs(state: LearnerState) -> np.ndarray:
    return _point_mass(state.k, int(np.argmax(state.cumulative_scores)))


def _ew_probs(state: LearnerState) -> np.ndarray:
    # weights (1 + eps)^(U / h)
    return softmax(state.cumulative_scores * (math.log1p(state.epsilon) / state.h))


def _ftpl_probs(state: LearnerState) -> np.ndarray:
    scores = state.cumulative_scores
    if state.hallucinations is not None:
        scores = scores + state.hallucinations
    return _point_mass(state.k, int(np.argmax(scores)))


STEP_RULES: Dict[LearnerKind, Callable[[LearnerState], np.ndarray]] = {
    LearnerKind.FTL: _ftl_probs,
    LearnerKind.EW: _ew_probs,
    LearnerKind.FTPL: _ftpl_probs,
}


def _rule(kind: Union[LearnerKind, str]) -> Callable[[LearnerState], np.ndarray]:
    try:
        return STEP_RULES[LearnerKind(kind)]
    except (KeyError, ValueError):
        raise ConfigError(f"Unknown full-feedback learner kind: {kind}")


def learner_step(state: LearnerState, kind: Union[LearnerKind, str]) -> ActionDistribution:
    """
    Returns the round's action distribution without touching the state.

    FTL and FTPL put all mass on the (perturbed) leader, lowest index on
    ties; EW returns the exponential weights exactly.
    """
    PayoffValidator.epsilon(state.epsilon)
    return ActionDistribution(_rule(kind)(state))


def learner_update(state: LearnerState, payoff_vector: Union[PayoffVector, np.ndarray]) -> LearnerState:
    """Adds the round's payoffs to the cumulative scores and advances the round."""
    entries = payoff_vector.entries if isinstance(payoff_vector, PayoffVector) else np.asarray(payoff_vector, dtype=float)
    if entries.shape != (state.k,):
        raise DomainError(f"Payoff vector has length {entries.shape[0] if entries.ndim else 0}, learner has {state.k} actions")
    return replace(state, cumulative_scores=state.cumulative_scores + entries, round_index=state.round_index + 1)


def _geometric_counts(epsilon: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if epsilon >= 1.0:
        return np.zeros(size)
    uniforms = 1.0 - rng.random(size)  # in (0, 1]
    return np.floor(np.log(uniforms) / math.log1p(-epsilon))


def ftpl_hallucinate(
    epsilon: float,
    h: float,
    k: int,
    rng: np.random.Generator,
    rerandomize_each_round: bool = False,
) -> Perturbation:
    """
    Draws h * Z_a for every action, Z_a the number of tails before the first
    head of a coin with heads probability epsilon.

    Sampling is by inverse CDF: Z = floor(ln U / ln(1 - epsilon)).
    """
    PayoffValidator.epsilon(epsilon)
    h = PayoffValidator.ceiling(h)
    return Perturbation(h * _geometric_counts(epsilon, k, rng), rerandomize_each_round)


def geometric_by_coin_flips(epsilon: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Reference sampler that literally flips coins until the first head."""
    PayoffValidator.epsilon(epsilon)
    counts = np.zeros(size)
    for j in range(size):
        tails = 0
        while rng.random() >= epsilon:
            tails += 1
        counts[j] = tails
    return counts


def _column_matrix(payoff_matrix: np.ndarray) -> np.ndarray:
    matrix = np.array(payoff_matrix, dtype=float)
    if matrix.ndim != 2 or matrix.size == 0:
        raise DomainError(f"Need a non-empty k x n payoff matrix, got shape {matrix.shape}")
    return matrix


def btl_value(payoff_matrix: np.ndarray) -> Tuple[float, List[int]]:
    """
    Be-the-Leader total on a k x n offline matrix.

    Round i picks argmax_a U_a^i, the leader after seeing round i. The total
    always dominates the best fixed action.
    """
    matrix = _column_matrix(payoff_matrix)
    prefix = np.cumsum(matrix, axis=1)
    choices = np.argmax(prefix, axis=0)
    total = float(matrix[choices, np.arange(matrix.shape[1])].sum())
    opt = float(prefix[:, -1].max())
    if total < opt - 1e-9 * max(1.0, abs(opt)):
        logging.error(f"BTL total {total} fell below OPT {opt}")
        raise DomainError(f"Be-the-Leader total {total} is below the best fixed action {opt}")
    return total, [int(c) for c in choices]


def btl_curve(payoff_matrix: np.ndarray) -> pd.DataFrame:
    """Cumulative BTL and best-fixed-action payoffs after every round."""
    matrix = _column_matrix(payoff_matrix)
    prefix = np.cumsum(matrix, axis=1)
    choices = np.argmax(prefix, axis=0)
    return pd.DataFrame({
        "round": np.arange(1, matrix.shape[1] + 1),
        "btl": np.cumsum(matrix[choices, np.arange(matrix.shape[1])]),
        "opt": prefix.max(axis=0),
    })


def default_epsilon(kind: Union[LearnerKind, str], k: int, n: int) -> float:
    """Horizon-aware learning rate: sqrt(ln k / n) for EW, sqrt((1 + ln k) / n) for FTPL."""
    kind = LearnerKind(kind)
    if n < 1:
        raise ConfigError(f"Horizon must be positive, got {n}")
    if kind == LearnerKind.FTPL:
        return min(1.0, math.sqrt((1.0 + math.log(k)) / n))
    if k < 2:
        return 1.0
    return min(1.0, math.sqrt(math.log(k) / n))


def anytime_epsilon(k: int, round_number: int) -> float:
    if k < 2:
        return 1.0
    return min(1.0, math.sqrt(math.log(k) / max(1, round_number)))


def ew_regret_bound(k: int, n: int, h: float = 1.0) -> float:
    return 2.0 * h * math.sqrt(math.log(k) / n)


def ftpl_regret_bound(k: int, n: int, h: float = 1.0) -> float:
    return 2.0 * h * math.sqrt((1.0 + math.log(k)) / n)


class Learner:
    """
    A stateful full-feedback learner.

    Each round the harness calls act() to sample an action and then
    observe() with the full payoff vector. Play is recorded so that
    play_log() returns the complete history.
    """

    def __init__(
        self,
        k: int,
        kind: Union[LearnerKind, str] = LearnerKind.EW,
        epsilon: Optional[float] = None,
        h: float = 1.0,
        rng: Optional[np.random.Generator] = None,
        rerandomize: bool = True,
        anytime: bool = False,
        horizon: Optional[int] = None,
        record: bool = True,
    ):
        self.kind = LearnerKind(kind)
        if self.kind not in STEP_RULES:
            raise ConfigError(f"{self.kind.value} is not a full-feedback learner kind")
        if k < 1:
            raise ConfigError(f"Learner needs at least one action, got k={k}")
        if epsilon is None:
            epsilon = default_epsilon(self.kind, k, horizon) if horizon else 1.0
        self.anytime = anytime
        self.rerandomize = rerandomize
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.state = LearnerState.initial(k, epsilon, h)
        self._rule = STEP_RULES[self.kind]
        self._perturbation: Optional[Perturbation] = None
        self._probs: Optional[np.ndarray] = None
        self._action: Optional[int] = None
        self._builder = PlayLogBuilder(k, h) if record else None

    @property
    def k(self) -> int:
        return self.state.k

    @property
    def h(self) -> float:
        return self.state.h

    def _current_state(self) -> LearnerState:
        state = self.state
        if self.anytime:
            state = replace(state, epsilon=anytime_epsilon(state.k, state.round_index + 1))
        if self.kind == LearnerKind.FTPL:
            if self._perturbation is None or self._perturbation.rerandomize_each_round:
                self._perturbation = ftpl_hallucinate(state.epsilon, state.h, state.k, self.rng, self.rerandomize)
            state = replace(state, hallucinations=self._perturbation.values)
        return state

    def distribution(self) -> np.ndarray:
        """The mixed strategy for the current round (drawn once per round)."""
        if self._probs is None:
            self._probs = self._rule(self._current_state())
        return self._probs

    def act(self) -> int:
        probs = self.distribution()
        self._action = int(self.rng.choice(probs.size, p=probs))
        return self._action

    def observe(self, payoff_vector: Union[PayoffVector, np.ndarray]) -> None:
        entries = payoff_vector.entries if isinstance(payoff_vector, PayoffVector) else np.asarray(payoff_vector, dtype=float)
        if self._probs is None:
            self.distribution()
        if self._builder is not None:
            action = self._action if self._action is not None else int(np.argmax(self._probs))
            self._builder.append(self._probs, action, entries)
        self.state = learner_update(self.state, entries)
        self._probs = None
        self._action = None

    def play_log(self) -> PlayLog:
        if self._builder is None:
            raise DomainError("This learner was created with record=False")
        return self._builder.build()


def adversary_for_deterministic(learner: Learner, n: int) -> PayoffStream:
    """
    Builds the stream that pays 0 to whatever the learner picks and 1 to
    every other action, round after round.

    The learner must be deterministic given its own generator; it plays
    against the stream while it is built and keeps the history in its log.
    """
    rows = np.ones((n, learner.k))
    for i in range(n):
        action = learner.act()
        rows[i, action] = 0.0
        learner.observe(rows[i])
    logging.info(f"Built {n}-round adversarial stream against {learner.kind.value}")
    return PayoffStream(rows, 1.0)


def run_full_feedback(learner: Learner, stream: PayoffStream) -> PlayLog:
    """Plays the learner against an oblivious stream and returns its log."""
    if stream.k != learner.k:
        raise DomainError(f"Stream has {stream.k} actions, learner has {learner.k}")
    for i in range(stream.n):
        learner.act()
        learner.observe(stream.matrix[i])
    return learner.play_log()


def coupled_ftpl_btpl_agreement(stream: PayoffStream, epsilon: float, rng: np.random.Generator) -> Tuple[float, float]:
    """
    Frequency with which FTPL and its be-the-leader twin pick the same
    action when both share the round's hallucination.

    Returns:
        (agreement frequency, its standard error)
    """
    PayoffValidator.epsilon(epsilon)
    matrix = stream.matrix
    n, k = matrix.shape
    before = np.vstack([np.zeros(k), np.cumsum(matrix, axis=0)[:-1]])
    after = before + matrix
    noise = stream.h * np.vstack([_geometric_counts(epsilon, k, rng) for _ in range(n)])
    agree = np.argmax(before + noise, axis=1) == np.argmax(after + noise, axis=1)
    freq = float(np.mean(agree))
    return freq, math.sqrt(max(freq * (1.0 - freq), 1e-12) / n)
