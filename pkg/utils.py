import logging
from typing import Optional, Sequence, Union

import numpy as np

from errors import ConfigError, DomainError

ArrayLike = Union[Sequence[float], np.ndarray]


class PayoffValidator:
    """
    Validates payoffs and probability vectors on ingestion.

    Payoffs outside [0, h] by more than SLACK are rejected, never clamped.
    """
    SLACK: float = 1e-9
    DISTRIBUTION_TOL: float = 1e-12

    @classmethod
    def ceiling(cls, h: float) -> float:
        """Checks that a payoff ceiling is a positive finite number."""
        h = float(h)
        if not np.isfinite(h) or h <= 0:
            raise DomainError(f"Payoff ceiling must be positive and finite, got {h}")
        return h

    @classmethod
    def payoffs(cls, values: ArrayLike, h: float, k: Optional[int] = None) -> np.ndarray:
        """
        Validates a payoff vector or matrix against the range [0, h].

        Args:
            values: A length-k vector or an n x k matrix of payoffs.
            h: The payoff ceiling.
            k: The expected number of actions (last axis), if known.

        Returns:
            np.ndarray: A float copy of the payoffs.

        Raises:
            DomainError: If the shape is wrong or an entry lies outside [0, h].
        """
        h = cls.ceiling(h)
        arr = np.array(values, dtype=float)
        if arr.ndim not in (1, 2) or arr.shape[-1] < 1:
            raise DomainError(f"Payoffs must be a non-empty vector or matrix, got shape {arr.shape}")
        if k is not None and arr.shape[-1] != k:
            raise DomainError(f"Expected {k} actions, got {arr.shape[-1]}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Payoffs must be finite")
        if arr.size == 0:
            return arr
        low, high = float(arr.min()), float(arr.max())
        if low < -cls.SLACK or high > h + cls.SLACK:
            logging.error(f"Rejected payoffs in [{low}, {high}] for ceiling h={h}")
            raise DomainError(f"Payoff out of range [0, {h}]: observed min {low}, max {high}")
        return arr

    @classmethod
    def distribution(cls, probs: ArrayLike, k: Optional[int] = None) -> np.ndarray:
        """Validates one probability vector (or each row of a matrix of them)."""
        arr = np.array(probs, dtype=float)
        if arr.ndim not in (1, 2) or arr.shape[-1] < 1:
            raise DomainError(f"Distribution must be a non-empty vector, got shape {arr.shape}")
        if k is not None and arr.shape[-1] != k:
            raise DomainError(f"Expected a distribution over {k} actions, got {arr.shape[-1]}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("Probabilities must be finite and non-negative")
        drift = np.abs(arr.sum(axis=-1) - 1.0)
        if np.any(drift > cls.DISTRIBUTION_TOL):
            raise DomainError(f"Probabilities must sum to 1, off by {float(np.max(drift)):.3e}")
        return arr

    @classmethod
    def action(cls, action: int, k: int) -> int:
        if not 0 <= int(action) < k:
            raise DomainError(f"Action index {action} outside [0, {k})")
        return int(action)

    @staticmethod
    def epsilon(eps: float, name: str = "epsilon") -> float:
        """Checks a rate lies in (0, 1]; raises ConfigError otherwise."""
        eps = float(eps)
        if not (0 < eps <= 1):
            raise ConfigError(f"{name} must lie in (0, 1], got {eps}")
        return eps


def normalize(weights: np.ndarray) -> np.ndarray:
    """Rescales non-negative weights into a probability vector."""
    total = float(np.sum(weights))
    if total <= 0 or not np.isfinite(total):
        raise DomainError("Cannot normalize weights with non-positive total")
    return np.asarray(weights, dtype=float) / total


