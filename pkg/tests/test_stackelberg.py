"""Tests for Stackelberg values, the envelope constant and manipulation runs."""

import numpy as np
import pytest

from errors import DomainError
from game_library import slow_rate_game
from online_learners import Learner, run_full_feedback
from payoff_streams import uniform_stream
from regret_core import PlayLog
from stackelberg import (
    LeaderProblem, ManipulationSchedule, OSV_INFEASIBLE, grid_search_osv, manipulation_ceiling, mean_based_check,
    minimum_forceable_regret, osv, osv_envelope_constant, run_manipulation, stackelberg_value,
)
from swap_reduction import SdaLearner

LEFT = 0


class TestOptimisticValue:
    """OSV(b, r) by linear programming."""

    @pytest.mark.parametrize("r", [0.0, 0.001, 0.005, 0.01, 0.02])
    def test_slow_rate_curve(self, r) -> None:
        """OSV(Left, r) = min(r / epsilon, 1) with epsilon = 0.01."""
        assert osv(LeaderProblem(slow_rate_game(0.01), 0, r)) == pytest.approx(min(r / 0.01, 1.0), abs=1e-9)

    def test_matches_grid_search(self, trap) -> None:
        """The LP agrees with brute force over the leader simplex."""
        for b in range(3):
            for r in (0.0, 0.05, 0.3, 1.0):
                exact = osv(LeaderProblem(trap, b, r))
                brute = grid_search_osv(trap, b, r, steps=20000)
                if exact == OSV_INFEASIBLE:
                    assert brute == OSV_INFEASIBLE
                else:
                    assert exact == pytest.approx(brute, abs=1e-3)

    def test_left_at_zero_regret(self) -> None:
        """Left is a best response once the leader plays Down, which pays the leader 0."""
        game = slow_rate_game(0.01)
        assert osv(LeaderProblem(game, 0, 0.0)) == pytest.approx(0.0)
        assert minimum_forceable_regret(game, 0) == pytest.approx(0.0)

    def test_negative_regret_rejected(self, trap) -> None:
        """Tolerances are non-negative."""
        with pytest.raises(DomainError):
            LeaderProblem(trap, 0, -0.1)


class TestStackelbergValue:
    """SV and the max-margin commitment."""

    def test_slow_rate_value(self) -> None:
        """SV = 0 and C = 1 / epsilon."""
        game = slow_rate_game(0.01)
        assert stackelberg_value(game).value == pytest.approx(0.0, abs=1e-9)
        assert osv_envelope_constant(game) == pytest.approx(100.0, rel=1e-4)

    def test_trap_value_and_commitment(self, trap) -> None:
        """SV = 0 via Left; committing to Up leaves Left ahead by 0.1."""
        solution = stackelberg_value(trap)
        assert solution.value == pytest.approx(0.0, abs=1e-9)
        assert solution.follower_action == LEFT
        assert solution.leader_strategy == pytest.approx([1.0, 0.0], abs=1e-7)
        assert solution.margin == pytest.approx(0.1, abs=1e-7)

    def test_trap_envelope_constant(self, trap) -> None:
        """OSV(b, r) <= SV + 2 r on the trap."""
        assert osv_envelope_constant(trap) == pytest.approx(2.0, rel=1e-4)


class TestManipulation:
    """Leader schedules against learning followers."""

    @pytest.mark.slow
    def test_up_then_down_beats_stackelberg_against_ew(self, trap) -> None:
        """A mean-based follower lets Up-then-Down earn far above SV = 0."""
        n = 100000
        follower = Learner(3, "EW", h=2.0, rng=np.random.default_rng(7), horizon=n)
        report = run_manipulation(trap, ManipulationSchedule.up_then_down(), follower, n, np.random.default_rng(8),
                                  sv=0.0, osv_constant=2.0)
        assert report.leader_avg > 0.5
        assert report.leader_avg <= report.ceiling + 1e-9

    def test_swap_regret_follower_respects_ceiling(self, trap) -> None:
        """Against SDA the leader's average never exceeds the OSV ceiling."""
        n = 20000
        follower = SdaLearner(3, h=2.0, rng=np.random.default_rng(3), horizon=n)
        report = run_manipulation(trap, ManipulationSchedule.up_then_down(), follower, n, np.random.default_rng(4),
                                  sv=0.0, osv_constant=2.0)
        assert report.leader_avg <= report.ceiling + 1e-9
        assert report.follower_swap_regret.per_round_regret >= 0.0

    def test_static_stackelberg_commitment(self, trap) -> None:
        """Committing to the Stackelberg strategy earns about SV late in the run."""
        n = 20000
        strategy = stackelberg_value(trap).leader_strategy
        follower = Learner(3, "EW", h=2.0, rng=np.random.default_rng(5), horizon=n)
        report = run_manipulation(trap, ManipulationSchedule.static(strategy), follower, n, np.random.default_rng(6),
                                  sv=0.0, osv_constant=2.0)
        assert report.leader_payoffs[3 * n // 4:].mean() == pytest.approx(0.0, abs=0.05)

    def test_ceiling_by_hand(self, trap) -> None:
        """Follower always Left while the leader plays Up: beta_Left = 1, rho = 0."""
        ceiling = manipulation_ceiling(trap, [0] * 10, [LEFT] * 10)
        assert ceiling == pytest.approx(0.0, abs=1e-9)

    def test_schedule_fractions(self) -> None:
        """Phase fractions must sum to one."""
        with pytest.raises(DomainError):
            ManipulationSchedule(((0, 0.6), (1, 0.6)))
        assert ManipulationSchedule.up_then_down().boundaries(10) == [5, 10]


class TestMeanBasedCheck:
    """Detection of learners that keep playing badly trailing actions."""

    def test_ew_is_mean_based(self, rng) -> None:
        """EW holds with gamma = 5 sqrt(ln k / n) h."""
        n, k = 2000, 3
        log = run_full_feedback(Learner(k, "EW", rng=rng, horizon=n), uniform_stream(k, n, rng))
        assert mean_based_check(log, 5 * np.sqrt(np.log(k) / n)).holds

    def test_ftl_is_mean_based(self, rng) -> None:
        """The leader never trails."""
        log = run_full_feedback(Learner(3, "FTL", rng=rng), uniform_stream(3, 500, rng))
        assert mean_based_check(log, 0.05).holds

    def test_playing_the_worst_action_fails(self) -> None:
        """Always playing the action that never pays is flagged."""
        n = 100
        payoffs = np.tile([1.0, 0.0], (n, 1))
        dists = np.tile([0.0, 1.0], (n, 1))
        log = PlayLog(dists, np.ones(n, dtype=int), np.zeros(n), 1.0, payoffs)
        check = mean_based_check(log, 0.1)
        assert not check.holds
        assert check.violations[0][:2] == (12, 1)
