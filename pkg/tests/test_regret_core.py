"""Tests for the shared types and the external and swap regret calculators."""

import numpy as np
import pytest

from errors import BanditLogError, DomainError
from regret_core import (
    ActionDistribution, PayoffStream, PayoffVector, PlayLog, PlayLogBuilder, best_in_hindsight_regret,
    regret_curve, swap_matrix, swap_regret, with_revealed_payoffs,
)


def _pure_log(actions, payoffs, h=1.0):
    payoffs = np.asarray(payoffs, dtype=float)
    n, k = payoffs.shape
    dists = np.zeros((n, k))
    dists[np.arange(n), actions] = 1.0
    return PlayLog(dists, actions, payoffs[np.arange(n), actions], h, payoffs)


class TestValueTypes:
    """Construction-time validation of payoffs and distributions."""

    def test_payoff_vector_rejects_values_above_ceiling(self) -> None:
        """Out-of-range payoffs raise instead of being clamped."""
        with pytest.raises(DomainError):
            PayoffVector(np.array([0.2, 1.5]), h=1.0)

    def test_payoff_vector_accepts_slack(self) -> None:
        """Rounding noise within the slack is tolerated."""
        vector = PayoffVector(np.array([1.0 + 1e-12, -1e-12]), h=1.0)
        assert vector.k == 2

    def test_distribution_must_sum_to_one(self) -> None:
        """A vector summing to 0.9 is not a distribution."""
        with pytest.raises(DomainError):
            ActionDistribution(np.array([0.5, 0.4]))

    def test_point_mass_and_uniform(self) -> None:
        """Helper constructors build the expected vectors."""
        assert ActionDistribution.point_mass(3, 2).probs.tolist() == [0.0, 0.0, 1.0]
        assert ActionDistribution.uniform(4).probs == pytest.approx(np.full(4, 0.25))

    def test_sample_follows_generator_choice(self) -> None:
        """Sampling draws exactly what Generator.choice draws from the same seed."""
        dist = ActionDistribution(np.array([0.2, 0.5, 0.3]))
        ours, theirs = np.random.default_rng(9), np.random.default_rng(9)
        draws = [dist.sample(ours) for _ in range(200)]
        assert draws == [int(theirs.choice(3, p=dist.probs)) for _ in range(200)]
        assert ActionDistribution.point_mass(4, 1).sample(ours) == 1

    def test_stream_is_read_only(self) -> None:
        """Streams freeze their matrix."""
        stream = PayoffStream(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            stream.matrix[0, 0] = 1.0


class TestPlayLog:
    """PlayLog invariants and the builder."""

    def test_observed_must_match_matrix(self) -> None:
        """A logged payoff that disagrees with the payoff matrix is rejected."""
        with pytest.raises(DomainError):
            PlayLog(np.array([[1.0, 0.0]]), [0], [0.3], 1.0, np.array([[0.5, 0.1]]))

    def test_builder_fills_observed_from_vector(self) -> None:
        """Full-feedback rounds derive the observed payoff from the vector."""
        builder = PlayLogBuilder(2)
        builder.append(np.array([0.5, 0.5]), 1, np.array([0.2, 0.9]))
        log = builder.build()
        assert log.observed.tolist() == [0.9]
        assert not log.is_bandit

    def test_builder_needs_observed_for_bandit_rounds(self) -> None:
        """A bandit round without an observed payoff is an error."""
        builder = PlayLogBuilder(2, full_feedback=False)
        with pytest.raises(DomainError):
            builder.append(np.array([0.5, 0.5]), 0)

    def test_empty_log_has_no_regret(self) -> None:
        """Regret on zero rounds is undefined."""
        log = PlayLogBuilder(2).build()
        assert log.n == 0
        with pytest.raises(DomainError):
            best_in_hindsight_regret(log)

    def test_bandit_log_needs_reconstruction(self) -> None:
        """Hidden payoffs cannot be scored directly."""
        builder = PlayLogBuilder(2, full_feedback=False)
        builder.append(np.array([0.5, 0.5]), 0, observed_payoff=0.4)
        with pytest.raises(BanditLogError):
            best_in_hindsight_regret(builder.build())

    def test_slice(self) -> None:
        """Slicing keeps the requested rounds only."""
        log = _pure_log([0, 1, 0], [[1, 0], [0, 1], [1, 0]])
        part = log.slice(1, 3)
        assert part.n == 2
        assert part.actions.tolist() == [1, 0]


class TestRegret:
    """Best-in-hindsight and swap regret."""

    def test_external_regret_on_alternating_play(self) -> None:
        """Playing the wrong action each round against alternating payoffs."""
        log = _pure_log([0, 1], [[0, 1], [1, 0]])
        report = best_in_hindsight_regret(log)
        assert report.algorithm_payoff == 0.0
        assert report.benchmark_payoff == 1.0
        assert report.best_action_or_swap == 0
        assert report.per_round_regret == pytest.approx(0.5)

    def test_swap_regret_dominates_external(self) -> None:
        """Swapping each action separately earns both rounds."""
        log = _pure_log([0, 1], [[0, 1], [1, 0]])
        swap = swap_regret(log)
        assert swap.best_action_or_swap == (1, 0)
        assert swap.total_regret == pytest.approx(2.0)
        assert swap.total_regret >= best_in_hindsight_regret(log).total_regret

    def test_swap_matrix_entries(self) -> None:
        """Entry (a, a') is the payoff of a' on rounds where a was played."""
        log = _pure_log([0, 0, 1], [[0.2, 0.4], [0.1, 0.3], [0.9, 0.5]])
        assert swap_matrix(log) == pytest.approx(np.array([[0.3, 0.7], [0.9, 0.5]]))

    def test_distribution_and_realized_modes_differ(self) -> None:
        """Expected payoff uses the mixed strategy; realized uses the draw."""
        payoffs = np.array([[1.0, 0.0]])
        log = PlayLog(np.array([[0.5, 0.5]]), [1], [0.0], 1.0, payoffs)
        assert best_in_hindsight_regret(log, True).algorithm_payoff == pytest.approx(0.5)
        assert best_in_hindsight_regret(log, False).algorithm_payoff == 0.0

    def test_regret_curve_ends_at_total(self) -> None:
        """The last row of the curve matches the report."""
        log = _pure_log([0, 1, 1, 0], [[0.3, 0.9], [0.2, 0.1], [0.7, 0.7], [1.0, 0.0]])
        curve = regret_curve(log)
        assert curve["regret"].iloc[-1] == pytest.approx(best_in_hindsight_regret(log).total_regret)
        assert curve["round"].tolist() == [1, 2, 3, 4]

    def test_report_to_dict_lists_swap(self) -> None:
        """Tuples become lists for JSON."""
        log = _pure_log([0, 1], [[0, 1], [1, 0]])
        assert swap_regret(log).to_dict()["deviation"] == [1, 0]


class TestRevealedPayoffs:
    """Turning a bandit log into an evaluation log."""

    def test_sampling_probabilities_become_distributions(self) -> None:
        """Distribution mode scores what was actually sampled."""
        builder = PlayLogBuilder(2, full_feedback=False)
        builder.append(np.array([1.0, 0.0]), 1, observed_payoff=0.6, exploration_probs=np.array([0.9, 0.1]))
        full = with_revealed_payoffs(builder.build(), np.array([[0.2, 0.6]]))
        assert full.distributions[0].tolist() == [0.9, 0.1]
        assert best_in_hindsight_regret(full).algorithm_payoff == pytest.approx(0.9 * 0.2 + 0.1 * 0.6)

    def test_disagreeing_reveal_is_rejected(self) -> None:
        """The revealed matrix must contain the observed payoffs."""
        builder = PlayLogBuilder(2, full_feedback=False)
        builder.append(np.array([0.5, 0.5]), 0, observed_payoff=0.6)
        with pytest.raises(DomainError):
            with_revealed_payoffs(builder.build(), np.array([[0.2, 0.6]]))
