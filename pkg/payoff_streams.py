import logging
from typing import Optional, Sequence

import numpy as np

from bandit import HiddenPayoffStream
from errors import DomainError
from regret_core import PayoffStream
from utils import PayoffValidator


def ftl_trap_stream(n: int) -> PayoffStream:
    """
    Two actions: round 1 pays (0, 1/2), then (1, 0) and (0, 1) alternate.

    Follow-the-Leader with lowest-index ties earns nothing on it while the
    best fixed action earns about n / 2.
    """
    if n < 1:
        raise DomainError("Stream needs at least one round")
    rows = np.zeros((n, 2))
    rows[0] = (0.0, 0.5)
    rows[1::2] = (1.0, 0.0)
    rows[2::2] = (0.0, 1.0)
    return PayoffStream(rows, 1.0)


def ew_example_table() -> PayoffStream:
    """The four-round, two-action table of the exponential-weights worked example."""
    return PayoffStream(np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]).T, 1.0)


def btl_example_table() -> np.ndarray:
    """Two actions by four rounds (k x n) used to compare Be-the-Leader with OPT."""
    return np.array([[0.4, 0.3, 0.3, 1.0], [0.2, 0.2, 1.0, 0.2]])


def bernoulli_stream(means: Sequence[float], n: int, rng: np.random.Generator, h: float = 1.0) -> PayoffStream:
    means = np.asarray(means, dtype=float)
    if np.any(means < 0) or np.any(means > 1):
        raise DomainError("Bernoulli means must lie in [0, 1]")
    draws = rng.random((n, means.shape[0])) < means
    return PayoffStream(h * draws.astype(float), h)


def uniform_stream(k: int, n: int, rng: np.random.Generator, h: float = 1.0) -> PayoffStream:
    return PayoffStream(h * rng.random((n, k)), h)


def switching_adversarial_stream(
    k: int,
    n: int,
    rng: np.random.Generator,
    h: float = 1.0,
    mean_block: int = 500,
) -> PayoffStream:
    """
    Seeded adversarial stream: the favoured action changes at random block
    boundaries and pays h/2 more than the uniform background noise.
    """
    if k < 1 or n < 1:
        raise DomainError("Stream needs at least one action and one round")
    rows = 0.5 * h * rng.random((n, k))
    start = 0
    while start < n:
        length = int(rng.geometric(1.0 / mean_block))
        favoured = int(rng.integers(k))
        rows[start:start + length, favoured] += 0.5 * h
        start += length
    logging.debug(f"Switching stream with k={k}, n={n}")
    return PayoffStream(rows, h)


class PenalizePreviousArm(HiddenPayoffStream):
    """
    Adaptive stream: Bernoulli arms, except the arm played in the previous
    round pays a fraction (1 - penalty) of its draw.

    Every round's vector is fixed from the history before the learner
    samples, so the realized matrix is a legitimate adversarial sequence.
    """

    def __init__(self, means: Sequence[float], n: int, rng: np.random.Generator, penalty: float = 1.0, h: float = 1.0):
        self._base = bernoulli_stream(means, n, rng, h)
        self.penalty = float(penalty)
        if not 0.0 <= self.penalty <= 1.0:
            raise DomainError(f"Penalty must lie in [0, 1], got {penalty}")
        self._rows = np.array(self._base.matrix)
        self._previous: Optional[int] = None
        self._next_round = 0
        super().__init__(self._base)

    def payoff(self, round_index: int, action: int) -> float:
        if round_index != self._next_round:
            raise DomainError(f"Adaptive stream must be queried in order: expected round {self._next_round}, got {round_index}")
        if self._previous is not None:
            self._rows[round_index, self._previous] *= 1.0 - self.penalty
        self._previous = int(action)
        self._next_round += 1
        return float(self._rows[round_index, action])

    def reveal(self) -> PayoffStream:
        return PayoffStream(self._rows[: self._next_round], self.h)


def stream_from_config(spec: dict, k: int, n: int, rng: np.random.Generator, h: float = 1.0) -> PayoffStream:
    """Builds an oblivious stream from a {"type": ...} config block."""
    kind = spec.get("type", "uniform")
    if kind == "ftl_trap":
        return ftl_trap_stream(n)
    if kind == "ew_example":
        return ew_example_table()
    if kind == "bernoulli":
        return bernoulli_stream(spec["means"], n, rng, h)
    if kind == "switching":
        return switching_adversarial_stream(k, n, rng, h, int(spec.get("mean_block", 500)))
    if kind == "matrix":
        return PayoffStream(PayoffValidator.payoffs(spec["rows"], h), h)
    if kind == "uniform":
        return uniform_stream(k, n, rng, h)
    raise DomainError(f"Unknown stream type: {kind}")
