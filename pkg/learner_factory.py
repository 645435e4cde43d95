import logging
from typing import Optional, Union

import numpy as np

from bandit import BanditLearner, exp3_epsilon
from codes import LearnerKind
from errors import ConfigError
from online_learners import Learner, default_epsilon
from swap_reduction import SdaLearner

AnyLearner = Union[Learner, SdaLearner, BanditLearner]


def _rate(value, kind: LearnerKind, k: int, horizon: Optional[int]) -> Optional[float]:
    if value is None:
        return None
    if value == "auto":
        if not horizon:
            raise ConfigError("epsilon='auto' needs a known horizon")
        return default_epsilon(LearnerKind.EW if kind == LearnerKind.SDA else kind, k, horizon)
    return float(value)


def _full_feedback(spec: dict, kind: LearnerKind, k: int, epsilon, h: float, rng, horizon, record: bool):
    if kind == LearnerKind.SDA:
        return SdaLearner(k, epsilon, h, rng, spec.get("delegate_kind", "EW"), horizon, record)
    return Learner(k, kind, epsilon, h, rng,
                   rerandomize=bool(spec.get("rerandomize", True)),
                   anytime=bool(spec.get("anytime", False)),
                   horizon=horizon, record=record)


def build_learner(spec: dict, rng: np.random.Generator, horizon: Optional[int] = None, record: bool = True) -> AnyLearner:
    """
    Builds a learner from a config block {kind, k, h, epsilon, rerandomize, ...}.

    Adding "exploration_epsilon" wraps the learner for bandit feedback; the
    base then sees the propensity-estimate ceiling h * k / exploration and,
    unless "epsilon" says otherwise, uses the exploration rate as its
    learning rate.
    """
    try:
        kind = LearnerKind(spec["kind"])
        k = int(spec["k"])
        h = float(spec.get("h", 1.0))
    except (KeyError, ValueError, TypeError) as e:
        raise ConfigError(f"Invalid learner spec {spec}: {e}") from e
    exploration = spec.get("exploration_epsilon")
    if exploration is None:
        return _full_feedback(spec, kind, k, _rate(spec.get("epsilon"), kind, k, horizon), h, rng, horizon, record)
    if exploration == "auto":
        if not horizon:
            raise ConfigError("exploration_epsilon='auto' needs a known horizon")
        exploration = exp3_epsilon(k, horizon)
    exploration = float(exploration)
    if not 0 < exploration <= 1:
        raise ConfigError(f"exploration_epsilon must lie in (0, 1], got {exploration}")
    learning_rate = _rate(spec.get("epsilon"), kind, k, horizon)
    if learning_rate is None:
        learning_rate = exploration
    base = _full_feedback(spec, kind, k, learning_rate, h * k / exploration, rng, horizon, record=False)
    logging.debug(f"Wrapped {kind.value} for bandit feedback: exploration={exploration:.4f}, rate={learning_rate:.4f}")
    return BanditLearner(base, exploration, h, rng, record)
