"""
Repeated bimatrix games: the full-feedback harness, empirical joint
distributions, epsilon-CE / epsilon-CCE certification and best-response
dynamics.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from errors import DomainError
from regret_core import PlayLog
from utils import PayoffValidator

JOINT_TOL = 1e-12


@dataclass(frozen=True)
class BimatrixGame:
    """
    Two payoff matrices in (row action a, column action b) indexing.

    row_payoffs[a, b] = U_R(a, b) and col_payoffs[a, b] = U_C(b, a).
    """
    row_payoffs: np.ndarray
    col_payoffs: np.ndarray
    row_labels: Optional[Tuple[str, ...]] = None
    col_labels: Optional[Tuple[str, ...]] = None
    name: str = "game"

    def __post_init__(self):
        row = np.array(self.row_payoffs, dtype=float)
        col = np.array(self.col_payoffs, dtype=float)
        if row.ndim != 2 or row.shape != col.shape or row.size == 0:
            raise DomainError(f"Payoff matrices must share a non-empty 2-D shape, got {row.shape} and {col.shape}")
        if not (np.all(np.isfinite(row)) and np.all(np.isfinite(col))):
            raise DomainError("Payoffs must be finite")
        row_labels = tuple(self.row_labels) if self.row_labels else tuple(str(a) for a in range(row.shape[0]))
        col_labels = tuple(self.col_labels) if self.col_labels else tuple(str(b) for b in range(row.shape[1]))
        if len(row_labels) != row.shape[0] or len(col_labels) != row.shape[1]:
            raise DomainError("Label count must match the matrix dimensions")
        object.__setattr__(self, "row_payoffs", row)
        object.__setattr__(self, "col_payoffs", col)
        object.__setattr__(self, "row_labels", row_labels)
        object.__setattr__(self, "col_labels", col_labels)

    @property
    def n_rows(self) -> int:
        return int(self.row_payoffs.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.row_payoffs.shape[1])

    @property
    def row_range(self) -> float:
        return float(np.ptp(self.row_payoffs)) or 1.0

    @property
    def col_range(self) -> float:
        return float(np.ptp(self.col_payoffs)) or 1.0

    def row_vector(self, b: int) -> np.ndarray:
        """Row player's payoffs for every own action against column action b, shifted into [0, range]."""
        return self.row_payoffs[:, b] - self.row_payoffs.min()

    def col_vector(self, a: int) -> np.ndarray:
        """Column player's payoffs for every own action against row action a, shifted into [0, range]."""
        return self.col_payoffs[a, :] - self.col_payoffs.min()

    def affine(self, scale: float, shift: float = 0.0) -> "BimatrixGame":
        return BimatrixGame(scale * self.row_payoffs + shift, scale * self.col_payoffs + shift,
                            self.row_labels, self.col_labels, self.name)


@dataclass(frozen=True)
class JointDistribution:
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 2 or np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DomainError("Joint distribution must be a non-negative finite matrix")
        if abs(weights.sum() - 1.0) > JOINT_TOL:
            raise DomainError(f"Joint distribution sums to {weights.sum()}, not 1")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform_over(cls, shape: Tuple[int, int], pairs: Sequence[Tuple[int, int]]) -> "JointDistribution":
        weights = np.zeros(shape)
        for a, b in pairs:
            weights[a, b] += 1.0
        return cls(weights / weights.sum())

    @classmethod
    def product(cls, row_probs: np.ndarray, col_probs: np.ndarray) -> "JointDistribution":
        weights = np.outer(row_probs, col_probs)
        return cls(weights / weights.sum())

    @property
    def row_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def col_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def to_frame(self, game: Optional[BimatrixGame] = None) -> pd.DataFrame:
        frame = pd.DataFrame(self.weights)
        if game is not None:
            frame.index = list(game.row_labels)
            frame.columns = list(game.col_labels)
        return frame


@dataclass(frozen=True)
class EquilibriumGap:
    """
    Per-player deviation gains. eps_* are floored at 0 for reporting; raw_*
    keep the signed value, which equals per-round regret on the matching log.
    """
    eps_row: float
    eps_col: float
    raw_row: float
    raw_col: float
    row_deviation: Union[int, Tuple[int, ...]]
    col_deviation: Union[int, Tuple[int, ...]]

    def holds(self, tol: float = 1e-12) -> bool:
        return self.eps_row <= tol and self.eps_col <= tol

    def to_dict(self) -> dict:
        def plain(dev):
            return list(dev) if isinstance(dev, tuple) else dev
        return {"eps_row": self.eps_row, "eps_col": self.eps_col, "raw_row": self.raw_row, "raw_col": self.raw_col,
                "row_deviation": plain(self.row_deviation), "col_deviation": plain(self.col_deviation)}


def _checked_joint(game: BimatrixGame, joint: Union[JointDistribution, np.ndarray]) -> np.ndarray:
    weights = joint.weights if isinstance(joint, JointDistribution) else JointDistribution(joint).weights
    if weights.shape != game.row_payoffs.shape:
        raise DomainError(f"Joint shape {weights.shape} does not match game {game.row_payoffs.shape}")
    return weights


def epsilon_cce(game: BimatrixGame, joint: Union[JointDistribution, np.ndarray]) -> EquilibriumGap:
    """
    Largest gain from committing ex ante to a fixed action, per player.

    The joint is a coarse correlated equilibrium iff both gaps are 0.
    """
    w = _checked_joint(game, joint)
    row_now = float(np.sum(w * game.row_payoffs))
    row_dev = game.row_payoffs @ w.sum(axis=0)
    col_now = float(np.sum(w * game.col_payoffs))
    col_dev = w.sum(axis=1) @ game.col_payoffs
    a_best, b_best = int(np.argmax(row_dev)), int(np.argmax(col_dev))
    raw_row, raw_col = float(row_dev[a_best] - row_now), float(col_dev[b_best] - col_now)
    return EquilibriumGap(max(0.0, raw_row), max(0.0, raw_col), raw_row, raw_col, a_best, b_best)


def _swap_gains(weights: np.ndarray, payoffs: np.ndarray) -> Tuple[float, Tuple[int, ...]]:
    # gains[a, a'] = sum_b weights[a, b] * (payoffs[a', b] - payoffs[a, b])
    gains = weights @ payoffs.T - np.sum(weights * payoffs, axis=1)[:, None]
    best = np.argmax(gains, axis=1)
    top = gains[np.arange(gains.shape[0]), best]
    swap = tuple(int(best[a]) if top[a] > 0 else a for a in range(gains.shape[0]))
    return float(np.sum(np.maximum(top, 0.0))), swap


def epsilon_ce(game: BimatrixGame, joint: Union[JointDistribution, np.ndarray]) -> EquilibriumGap:
    """
    Largest gain from a swap map applied to the recommended action, per player.

    Each recommended action is remapped independently; recommendations with
    zero probability add nothing.
    """
    w = _checked_joint(game, joint)
    eps_row, row_swap = _swap_gains(w, game.row_payoffs)
    eps_col, col_swap = _swap_gains(w.T, game.col_payoffs.T)
    return EquilibriumGap(eps_row, eps_col, eps_row, eps_col, row_swap, col_swap)


@dataclass(frozen=True)
class GameRun:
    """
    Result of a repeated-game run.

    joint is the empirical distribution of realized pairs. row_view_joint
    weighs the row player's mixed strategy against the column player's
    realized action (col_view_joint the other way round); on those joints
    the equilibrium gaps coincide with each player's distribution-mode
    regret.
    """
    row_log: PlayLog
    col_log: PlayLog
    joint: JointDistribution
    row_view_joint: JointDistribution
    col_view_joint: JointDistribution
    product_joint: JointDistribution

    def pairs_frame(self, game: BimatrixGame) -> pd.DataFrame:
        return pd.DataFrame({
            "round": np.arange(1, self.row_log.n + 1),
            "a": [game.row_labels[a] for a in self.row_log.actions],
            "b": [game.col_labels[b] for b in self.col_log.actions],
        })


def play_repeated(game: BimatrixGame, row_learner, col_learner, n: int) -> GameRun:
    """
    Plays n rounds with full feedback: each learner observes its whole
    payoff vector against the opponent's realized action.

    Payoffs are shifted to start at 0 before reaching the learners, which
    leaves regret unchanged; learners need a ceiling of at least the
    payoff range of their side.
    """
    if row_learner.k != game.n_rows or col_learner.k != game.n_cols:
        raise DomainError(f"Learners have {row_learner.k} x {col_learner.k} actions, game is {game.n_rows} x {game.n_cols}")
    if n < 1:
        raise DomainError("A repeated game needs at least one round")
    for learner, span in ((row_learner, np.ptp(game.row_payoffs)), (col_learner, np.ptp(game.col_payoffs))):
        if learner.h < span - PayoffValidator.SLACK:
            raise DomainError(f"Learner ceiling {learner.h} is below the payoff range {span}")
    realized = np.zeros((game.n_rows, game.n_cols))
    row_view = np.zeros_like(realized)
    col_view = np.zeros_like(realized)
    product = np.zeros_like(realized)
    for _ in range(n):
        p, q = row_learner.distribution(), col_learner.distribution()
        a, b = row_learner.act(), col_learner.act()
        realized[a, b] += 1.0
        row_view[:, b] += p
        col_view[a, :] += q
        product += np.outer(p, q)
        row_learner.observe(game.row_vector(b))
        col_learner.observe(game.col_vector(a))
    logging.info(f"Played {n} rounds of {game.name}")

    def joint(weights):
        return JointDistribution(weights / weights.sum())

    return GameRun(row_learner.play_log(), col_learner.play_log(), joint(realized), joint(row_view), joint(col_view), joint(product))


@dataclass(frozen=True)
class DynamicsTrace:
    pairs: List[Tuple[int, int]]
    joint: JointDistribution

    def to_frame(self, game: BimatrixGame) -> pd.DataFrame:
        return pd.DataFrame({
            "round": np.arange(1, len(self.pairs) + 1),
            "a": [game.row_labels[a] for a, _ in self.pairs],
            "b": [game.col_labels[b] for _, b in self.pairs],
        })


def best_response_dynamics(game: BimatrixGame, start: Tuple[int, int], n: int) -> DynamicsTrace:
    """
    Simultaneous best responses: round i + 1 answers the opponent's round-i
    action, lowest index on ties. The trace excludes the start pair.
    """
    a, b = start
    if not (0 <= a < game.n_rows and 0 <= b < game.n_cols):
        raise DomainError(f"Start pair {start} is outside the game")
    if n < 1:
        raise DomainError("Dynamics need at least one round")
    pairs = []
    for _ in range(n):
        a, b = int(np.argmax(game.row_payoffs[:, b])), int(np.argmax(game.col_payoffs[a, :]))
        pairs.append((a, b))
    return DynamicsTrace(pairs, JointDistribution.uniform_over(game.row_payoffs.shape, pairs))
