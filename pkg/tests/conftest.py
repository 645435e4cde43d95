import numpy as np
import pytest

from game_library import mean_based_trap, no_tie_rps
from market_simulator import MarketConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def rps():
    return no_tie_rps()


@pytest.fixture
def trap():
    return mean_based_trap(0.1)


@pytest.fixture
def duopoly():
    """Costs (0.1, 0.2), uniform values on [0, 1]^2, eleven prices 0, 0.1, ..., 1."""
    return MarketConfig.uniform_grid((0.1, 0.2), k=11, p_max=1.0, horizon=1000)
