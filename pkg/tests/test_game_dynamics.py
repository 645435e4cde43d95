"""Tests for equilibrium gaps, repeated play and best-response dynamics."""

import numpy as np
import pytest

from errors import DomainError
from game_dynamics import JointDistribution, best_response_dynamics, epsilon_ce, epsilon_cce, play_repeated
from game_library import matching_pennies, prisoners_dilemma
from online_learners import Learner
from regret_core import best_in_hindsight_regret, swap_regret
from swap_reduction import SdaLearner

R, P, S = 0, 1, 2


class TestEquilibriumGaps:
    """epsilon-CCE and epsilon-CE on no-tie rock-paper-scissors."""

    def test_cce_deviation_payoffs(self, rps) -> None:
        """Uniform on {(S,P), (P,S)}: fixed deviations gain 0, -7/2 and -5/2."""
        joint = JointDistribution.uniform_over((3, 3), [(S, P), (P, S)])
        gap = epsilon_cce(rps, joint)
        deviations = rps.row_payoffs @ joint.col_marginal - np.sum(joint.weights * rps.row_payoffs)
        assert deviations == pytest.approx([0.0, -3.5, -2.5])
        assert gap.eps_row == 0.0
        assert gap.raw_row == pytest.approx(0.0)
        assert gap.row_deviation == R

    def test_ce_gap_on_same_joint(self, rps) -> None:
        """Swapping P to R when told P gains 2 with probability 1/2."""
        joint = JointDistribution.uniform_over((3, 3), [(S, P), (P, S)])
        gap = epsilon_ce(rps, joint)
        assert gap.eps_row == pytest.approx(1.0)
        assert gap.row_deviation == (R, R, S)
        assert gap.eps_col == pytest.approx(1.0)
        assert not gap.holds()

    def test_pure_nash_is_ce(self) -> None:
        """(D, D) in the prisoner's dilemma has zero gaps."""
        game = prisoners_dilemma()
        joint = JointDistribution.uniform_over((2, 2), [(1, 1)])
        assert epsilon_ce(game, joint).holds()
        assert epsilon_cce(game, joint).holds()

    def test_ce_gap_dominates_cce_gap(self, rps, rng) -> None:
        """Every CE is a CCE."""
        for _ in range(10):
            weights = rng.random((3, 3))
            joint = JointDistribution(weights / weights.sum())
            assert epsilon_ce(rps, joint).eps_row >= epsilon_cce(rps, joint).eps_row - 1e-12

    def test_joint_must_sum_to_one(self) -> None:
        """Unnormalized weights are rejected."""
        with pytest.raises(DomainError):
            JointDistribution(np.full((2, 2), 0.3))


class TestBestResponseDynamics:
    """Simultaneous best responses."""

    def test_rps_six_cycle(self, rps) -> None:
        """From (R, S) the dynamics visit every off-diagonal pair and return."""
        trace = best_response_dynamics(rps, (R, S), 6)
        assert trace.pairs == [(R, P), (S, P), (S, R), (P, R), (P, S), (R, S)]
        assert epsilon_cce(rps, trace.joint).eps_row == pytest.approx(0.0)

    def test_matching_pennies_cycle(self) -> None:
        """From (H, H) the pennies cycle through all four pairs."""
        trace = best_response_dynamics(matching_pennies(), (0, 0), 4)
        assert trace.pairs == [(0, 1), (1, 1), (1, 0), (0, 0)]

    def test_start_outside_game(self, rps) -> None:
        """Start pairs must index the game."""
        with pytest.raises(DomainError):
            best_response_dynamics(rps, (3, 0), 2)


class TestRepeatedPlay:
    """Full-feedback repeated play."""

    def test_gaps_equal_distribution_regret(self, rps, rng) -> None:
        """On the row-view joint the gaps are the row player's regrets."""
        row = Learner(3, "EW", epsilon=0.1, h=7.0, rng=rng)
        col = Learner(3, "EW", epsilon=0.1, h=7.0, rng=rng)
        run = play_repeated(rps, row, col, 300)
        external = best_in_hindsight_regret(run.row_log)
        swap = swap_regret(run.row_log)
        assert epsilon_cce(rps, run.row_view_joint).raw_row == pytest.approx(external.per_round_regret, abs=1e-9)
        assert epsilon_ce(rps, run.row_view_joint).eps_row == pytest.approx(swap.per_round_regret, abs=1e-9)

    def test_sda_players_approach_correlated_equilibrium(self, rps, rng) -> None:
        """Two swap-regret learners drive the realized joint toward a CE."""
        n = 3000
        run = play_repeated(rps, SdaLearner(3, h=7.0, rng=rng, horizon=n), SdaLearner(3, h=7.0, rng=rng, horizon=n), n)
        gap = epsilon_ce(rps, run.joint)
        assert gap.eps_row <= 1.5
        assert gap.eps_col <= 1.5
        assert run.joint.weights.sum() == pytest.approx(1.0)

    def test_ceiling_below_payoff_range(self, rps, rng) -> None:
        """Learners must accept the shifted payoffs."""
        with pytest.raises(DomainError):
            play_repeated(rps, Learner(3, "EW", epsilon=0.1, h=1.0, rng=rng),
                          Learner(3, "EW", epsilon=0.1, h=7.0, rng=rng), 10)
