"""Tests for building learners from config blocks."""

import pytest

from bandit import BanditLearner, exp3_epsilon
from errors import ConfigError
from learner_factory import build_learner
from online_learners import Learner


class TestBuildLearner:
    """Config blocks to learner objects."""

    def test_full_feedback_kinds(self, rng) -> None:
        """FTL, EW and FTPL become plain learners."""
        for kind in ("FTL", "EW", "FTPL"):
            learner = build_learner({"kind": kind, "k": 3, "epsilon": 0.2}, rng)
            assert isinstance(learner, Learner)
            assert learner.kind.value == kind

    def test_auto_rate_needs_horizon(self, rng) -> None:
        """epsilon auto is horizon-tuned."""
        with pytest.raises(ConfigError):
            build_learner({"kind": "EW", "k": 3, "epsilon": "auto"}, rng)

    def test_bandit_wrapper(self, rng) -> None:
        """exploration_epsilon wraps the learner and lifts the base ceiling."""
        learner = build_learner({"kind": "EW", "k": 4, "h": 2.0, "exploration_epsilon": 0.25}, rng)
        assert isinstance(learner, BanditLearner)
        assert learner.exploration == 0.25
        assert learner.base.h == pytest.approx(2.0 * 4 / 0.25)
        assert learner.base.state.epsilon == 0.25

    def test_auto_exploration(self, rng) -> None:
        """exploration_epsilon auto uses the Exp3 rate."""
        learner = build_learner({"kind": "EW", "k": 5, "exploration_epsilon": "auto"}, rng, horizon=8000)
        assert learner.exploration == pytest.approx(exp3_epsilon(5, 8000))

    def test_invalid_kind(self, rng) -> None:
        """Unknown kinds are configuration errors."""
        with pytest.raises(ConfigError):
            build_learner({"kind": "Hedge", "k": 3}, rng)

    def test_out_of_range_exploration(self, rng) -> None:
        """Exploration rates live in (0, 1]."""
        with pytest.raises(ConfigError):
            build_learner({"kind": "EW", "k": 3, "exploration_epsilon": 1.5}, rng)
