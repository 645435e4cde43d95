"""Tests for play-log persistence."""

import numpy as np

from bandit import HiddenPayoffStream, bandit_run
from online_learners import Learner, run_full_feedback
from payoff_streams import bernoulli_stream, uniform_stream
from play_log_io import play_log_frame, read_play_log_csv, read_play_log_json, write_play_log_csv, write_play_log_json


class TestPlayLogFiles:
    """CSV and JSON files reproduce the log exactly."""

    def test_full_feedback_csv_is_bit_identical(self, rng, tmp_path) -> None:
        """Floats survive the CSV with round-trip precision."""
        log = run_full_feedback(Learner(3, "EW", epsilon=0.3, h=2.0, rng=rng), uniform_stream(3, 40, rng, 2.0))
        path = write_play_log_csv(log, str(tmp_path / "logs" / "play_log.csv"))
        back = read_play_log_csv(path)
        assert back.h == 2.0
        assert np.array_equal(back.payoffs, log.payoffs)
        assert np.array_equal(back.distributions, log.distributions)
        assert np.array_equal(back.actions, log.actions)

    def test_bandit_json_keeps_exploration(self, rng, tmp_path) -> None:
        """Bandit logs keep observed payoffs and sampling probabilities."""
        stream = HiddenPayoffStream(bernoulli_stream([0.3, 0.6], 25, rng))
        log = bandit_run(Learner(2, "EW", epsilon=0.1, h=20.0, rng=rng, record=False), stream, 0.1, 25, rng)
        back = read_play_log_json(write_play_log_json(log, str(tmp_path / "log.json")))
        assert back.is_bandit
        assert np.array_equal(back.observed, log.observed)
        assert np.array_equal(back.exploration_probs, log.exploration_probs)

    def test_frame_columns(self, rng) -> None:
        """One row per round with u_*, p_* and h columns."""
        log = run_full_feedback(Learner(2, "FTL", rng=rng), uniform_stream(2, 5, rng))
        frame = play_log_frame(log)
        assert list(frame.columns) == ["round", "action", "u_1", "u_2", "p_1", "p_2", "h"]
        assert len(frame) == 5
