"""
Stackelberg and optimistic Stackelberg values by linear programming, and
the manipulation experiments run against learning followers.

The leader is the row player of a BimatrixGame; follower payoffs are
U_F(b, a) = game.col_payoffs[a, b].
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import DomainError, SolverError
from game_dynamics import BimatrixGame
from regret_core import PlayLog, RegretReport, best_in_hindsight_regret, swap_regret
from simplex_solver import INFEASIBLE, maximize

OSV_INFEASIBLE = float("-inf")
LP_TOL = 1e-9
CHORD_TOL = 1e-7
MAX_CHORD_DEPTH = 40


@dataclass(frozen=True)
class LeaderProblem:
    """Keep follower action b within regret r of a best response while maximizing the leader's payoff."""
    game: BimatrixGame
    b: int
    r: float = 0.0

    def __post_init__(self):
        if not 0 <= self.b < self.game.n_cols:
            raise DomainError(f"Follower action {self.b} outside [0, {self.game.n_cols})")
        if not self.r >= 0:
            raise DomainError(f"Regret tolerance must be non-negative, got {self.r}")


@dataclass(frozen=True)
class OsvSolution:
    value: float
    leader_strategy: Optional[np.ndarray]

    @property
    def feasible(self) -> bool:
        return self.value != OSV_INFEASIBLE


def _regret_rows(game: BimatrixGame, b: int) -> np.ndarray:
    """Row b' holds U_F(b', a) - U_F(b, a) for every leader action a."""
    col = game.col_payoffs
    others = [bp for bp in range(game.n_cols) if bp != b]
    return np.array([col[:, bp] - col[:, b] for bp in others]).reshape(len(others), game.n_rows)


def osv_solution(problem: LeaderProblem) -> OsvSolution:
    game, b, r = problem.game, problem.b, problem.r
    rows = _regret_rows(game, b)
    result = maximize(
        game.row_payoffs[:, b],
        A_ub=rows if rows.size else None,
        b_ub=np.full(rows.shape[0], r) if rows.size else None,
        A_eq=np.ones((1, game.n_rows)),
        b_eq=[1.0],
        tol=LP_TOL,
    )
    if result.status == INFEASIBLE:
        return OsvSolution(OSV_INFEASIBLE, None)
    if not result.success:
        logging.error(f"OSV LP for b={b}, r={r} ended with status {result.status}")
        raise SolverError(f"OSV linear program failed with status {result.status}", result.residual)
    strategy = result.x / result.x.sum()
    return OsvSolution(float(game.row_payoffs[:, b] @ strategy), strategy)


def osv(problem: LeaderProblem) -> float:
    """
    Optimistic Stackelberg value OSV(b, r).

    Returns OSV_INFEASIBLE (minus infinity) when no leader strategy keeps b
    within r of a best response.
    """
    return osv_solution(problem).value


@dataclass(frozen=True)
class StackelbergSolution:
    value: float
    leader_strategy: np.ndarray
    follower_action: int
    margin: float
    values_by_action: Tuple[float, ...] = field(default=())


def _max_margin_commitment(game: BimatrixGame, b: int, value: float) -> Optional[Tuple[np.ndarray, float]]:
    """Among strategies earning the leader `value` with b a best response, maximize b's lead over the rest."""
    rows = _regret_rows(game, b)
    if rows.size == 0:
        return None
    k = game.n_rows
    a_ub = np.hstack([rows, np.ones((rows.shape[0], 1))])
    a_ub = np.vstack([a_ub, np.append(-game.row_payoffs[:, b], 0.0)])
    b_ub = np.append(np.zeros(rows.shape[0]), -(value - 1e-7 * max(1.0, abs(value))))
    result = maximize(np.append(np.zeros(k), 1.0), a_ub, b_ub, np.append(np.ones(k), 0.0).reshape(1, -1), [1.0], tol=LP_TOL)
    if not result.success:
        return None
    strategy = result.x[:k] / result.x[:k].sum()
    return strategy, float(result.x[k])


def stackelberg_value(game: BimatrixGame) -> StackelbergSolution:
    """
    SV = max_b OSV(b, 0), lowest b on ties.

    The returned commitment is the optimal one that maximizes the follower's
    best-response margin, so a learning follower faces a strict best
    response whenever the game allows one.
    """
    solutions = [osv_solution(LeaderProblem(game, b, 0.0)) for b in range(game.n_cols)]
    values = [s.value for s in solutions]
    best = max(values)
    if best == OSV_INFEASIBLE:
        raise SolverError("No follower action can be induced at zero regret")
    b_star = next(b for b, v in enumerate(values) if v >= best - LP_TOL * max(1.0, abs(best)))
    strategy, margin = solutions[b_star].leader_strategy, 0.0
    refined = _max_margin_commitment(game, b_star, values[b_star])
    if refined is not None:
        strategy, margin = refined
    logging.info(f"Stackelberg value {values[b_star]:.6f} via follower action {game.col_labels[b_star]} (margin {margin:.4g})")
    return StackelbergSolution(values[b_star], strategy, b_star, margin, tuple(values))


def minimum_forceable_regret(game: BimatrixGame, b: int) -> float:
    """Smallest r for which OSV(b, r) is finite."""
    rows = _regret_rows(game, b)
    if rows.size == 0:
        return 0.0
    k = game.n_rows
    # variables (x, s): minimize s subject to rows @ x <= s
    a_ub = np.hstack([rows, -np.ones((rows.shape[0], 1))])
    result = maximize(np.append(np.zeros(k), -1.0), a_ub, np.zeros(rows.shape[0]),
                      np.append(np.ones(k), 0.0).reshape(1, -1), [1.0], tol=LP_TOL)
    if not result.success:
        raise SolverError(f"Minimum regret LP failed with status {result.status}", result.residual)
    return max(0.0, float(result.x[k]))


def _osv_pieces(game: BimatrixGame, b: int) -> List[Tuple[float, float]]:
    """(r, OSV(b, r)) at the ends of the linear pieces of the concave curve."""
    col = game.col_payoffs
    r_lo = minimum_forceable_regret(game, b)
    r_hi = max(r_lo, float(col.max() - col.min())) + 1.0

    def value(r: float) -> float:
        v = osv(LeaderProblem(game, b, r))
        if v == OSV_INFEASIBLE:
            v = osv(LeaderProblem(game, b, r + 1e-9))
        return v

    points = {r_lo: value(r_lo), r_hi: value(r_hi)}

    def split(lo: float, hi: float, depth: int) -> None:
        mid = 0.5 * (lo + hi)
        f_mid = value(mid)
        points[mid] = f_mid
        if depth >= MAX_CHORD_DEPTH or abs(f_mid - 0.5 * (points[lo] + points[hi])) <= CHORD_TOL:
            return
        split(lo, mid, depth + 1)
        split(mid, hi, depth + 1)

    split(r_lo, r_hi, 0)
    return sorted(points.items())


def osv_envelope_constant(game: BimatrixGame) -> float:
    """
    Smallest C with OSV(b, r) <= SV + C * r for every b and every r >= 0.

    On each linear piece (f(r) - SV) / r is monotone, so it is enough to
    check piece endpoints, plus the slope at 0 when OSV(b, 0) = SV.
    """
    sv = stackelberg_value(game).value
    constant = 0.0
    for b in range(game.n_cols):
        pieces = _osv_pieces(game, b)
        for r, f in pieces:
            if r > 0 and f - sv > CHORD_TOL:
                constant = max(constant, (f - sv) / r)
        r0, f0 = pieces[0]
        if r0 == 0.0 and f0 >= sv - CHORD_TOL and len(pieces) > 1:
            r1, f1 = pieces[1]
            constant = max(constant, (f1 - f0) / r1)
    logging.info(f"Envelope constant C = {constant:.6g} for {game.name}")
    return constant


def grid_search_osv(game: BimatrixGame, b: int, r: float, steps: int = 10000) -> float:
    """Brute-force OSV over a uniform grid of the leader simplex (two or three leader actions)."""
    if game.n_rows == 2:
        t = np.linspace(0.0, 1.0, steps + 1)
        grid = np.column_stack([t, 1.0 - t])
    elif game.n_rows == 3:
        i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
        mask = i + j <= steps
        grid = np.column_stack([i[mask], j[mask], steps - i[mask] - j[mask]]) / steps
    else:
        raise DomainError("Grid search supports two or three leader actions")
    follower = grid @ game.col_payoffs
    feasible = follower.max(axis=1) - follower[:, b] <= r + 1e-12
    if not feasible.any():
        return OSV_INFEASIBLE
    return float((grid[feasible] @ game.row_payoffs[:, b]).max())


@dataclass(frozen=True)
class ManipulationSchedule:
    """Leader phases as (pure action index or mixed strategy, fraction of the horizon)."""
    phases: Tuple[Tuple[Union[int, Tuple[float, ...]], float], ...]

    def __post_init__(self):
        if not self.phases:
            raise DomainError("A schedule needs at least one phase")
        total = sum(fraction for _, fraction in self.phases)
        if abs(total - 1.0) > 1e-9 or any(fraction < 0 for _, fraction in self.phases):
            raise DomainError(f"Phase durations must be non-negative and sum to 1, got {total}")

    @classmethod
    def up_then_down(cls, up: int = 0, down: int = 1) -> "ManipulationSchedule":
        return cls(((up, 0.5), (down, 0.5)))

    @classmethod
    def static(cls, strategy: Union[int, Sequence[float]]) -> "ManipulationSchedule":
        if not isinstance(strategy, (int, np.integer)):
            strategy = tuple(float(p) for p in strategy)
        return cls(((strategy, 1.0),))

    def boundaries(self, n: int) -> List[int]:
        cumulative = np.cumsum([fraction for _, fraction in self.phases])
        return [int(round(c * n)) for c in cumulative]

    def to_dict(self) -> dict:
        return {"phases": [[list(s) if isinstance(s, tuple) else int(s), f] for s, f in self.phases]}


@dataclass(frozen=True)
class ManipulationReport:
    leader_avg: float
    sv: float
    osv_constant: float
    follower_bih_regret: RegretReport
    follower_swap_regret: RegretReport
    follower_realized_swap_regret: RegretReport
    ceiling: float
    leader_actions: np.ndarray
    leader_payoffs: np.ndarray

    def to_dict(self) -> dict:
        return {
            "leader_avg": self.leader_avg,
            "sv": self.sv,
            "osv_constant": self.osv_constant,
            "follower_bih_regret": self.follower_bih_regret.per_round_regret,
            "follower_swap_regret": self.follower_swap_regret.per_round_regret,
            "follower_realized_swap_regret": self.follower_realized_swap_regret.per_round_regret,
            "ceiling": self.ceiling,
        }


def manipulation_ceiling(game: BimatrixGame, leader_actions: Sequence[int], follower_actions: Sequence[int]) -> float:
    """
    Sum over follower actions b of beta_b * OSV(b, rho_b), where beta_b is
    how often b was played and rho_b its regret against the leader's
    empirical play on those rounds. Bounds the leader's realized average.
    """
    leader_actions = np.asarray(leader_actions)
    follower_actions = np.asarray(follower_actions)
    n = follower_actions.shape[0]
    total = 0.0
    for b in np.unique(follower_actions):
        mask = follower_actions == b
        mix = np.bincount(leader_actions[mask], minlength=game.n_rows) / mask.sum()
        follower = mix @ game.col_payoffs
        rho = float(follower.max() - follower[b])
        total += (mask.sum() / n) * osv(LeaderProblem(game, int(b), rho + 1e-12))
    return total


def run_manipulation(
    game: BimatrixGame,
    schedule: ManipulationSchedule,
    follower_learner,
    n: int,
    rng: np.random.Generator,
    sv: Optional[float] = None,
    osv_constant: Optional[float] = None,
) -> ManipulationReport:
    """
    Leader follows the schedule; the follower learns from its full payoff
    vector against the leader's realized action.
    """
    if follower_learner.k != game.n_cols:
        raise DomainError(f"Follower has {follower_learner.k} actions, game has {game.n_cols}")
    if follower_learner.h < np.ptp(game.col_payoffs) - 1e-9:
        raise DomainError(f"Follower ceiling {follower_learner.h} is below the payoff range")
    sv = stackelberg_value(game).value if sv is None else sv
    osv_constant = osv_envelope_constant(game) if osv_constant is None else osv_constant
    leader_actions = np.zeros(n, dtype=np.int64)
    leader_payoffs = np.zeros(n)
    start = 0
    for (strategy, _), stop in zip(schedule.phases, schedule.boundaries(n)):
        mixed = None if isinstance(strategy, (int, np.integer)) else np.clip(np.asarray(strategy, dtype=float), 0.0, None)
        if mixed is not None:
            mixed = mixed / mixed.sum()
        for i in range(start, stop):
            a = int(strategy) if mixed is None else int(rng.choice(mixed.size, p=mixed))
            b = follower_learner.act()
            follower_learner.observe(game.col_vector(a))
            leader_actions[i] = a
            leader_payoffs[i] = game.row_payoffs[a, b]
        start = stop
    log: PlayLog = follower_learner.play_log()
    leader_avg = float(leader_payoffs.mean())
    report = ManipulationReport(
        leader_avg=leader_avg,
        sv=sv,
        osv_constant=osv_constant,
        follower_bih_regret=best_in_hindsight_regret(log, True),
        follower_swap_regret=swap_regret(log, True),
        follower_realized_swap_regret=swap_regret(log, False),
        ceiling=manipulation_ceiling(game, leader_actions, log.actions),
        leader_actions=leader_actions,
        leader_payoffs=leader_payoffs,
    )
    logging.info(f"Manipulation run: leader average {leader_avg:.4f} against SV {sv:.4f}")
    return report


@dataclass(frozen=True)
class MeanBasedCheck:
    holds: bool
    violations: List[Tuple[int, int, float, float]]


def mean_based_check(log: PlayLog, gamma: float) -> MeanBasedCheck:
    """
    Flags (round, action, gap, probability) wherever an action trailing the
    best cumulative payoff by more than gamma * n still got probability
    above gamma.
    """
    if log.payoffs is None:
        raise DomainError("Mean-based check needs full payoff vectors")
    if log.n == 0:
        raise DomainError("Mean-based check needs at least one round")
    before = np.vstack([np.zeros(log.k), np.cumsum(log.payoffs, axis=0)[:-1]])
    gaps = before.max(axis=1, keepdims=True) - before
    flagged = (gaps > gamma * log.n) & (log.distributions > gamma)
    rounds, actions = np.nonzero(flagged)
    violations = [(int(i) + 1, int(a), float(gaps[i, a]), float(log.distributions[i, a])) for i, a in zip(rounds, actions)]
    return MeanBasedCheck(not violations, violations)
