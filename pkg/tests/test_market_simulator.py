"""Tests for the duopoly buyer, stage profits, the competitive benchmark and seller runs."""

import numpy as np
import pytest

from errors import ConfigError, DomainError
from market_simulator import (
    COLLUSIVE_RULE, JOINT_MAX_RULE, BanditSdaSeller, FixedPriceSeller, GrimTriggerSeller, MarketConfig, ValueDistribution, buyer_choice,
    competitive_benchmark, market_config_from_dict, profit_tables, read_market_csv, sale_probability,
    seller_from_config, simulate_market, write_market_csv,
)


class TestBuyer:
    """The buyer picks the larger positive surplus."""

    def test_choices(self) -> None:
        """Larger surplus wins, no positive surplus means no sale."""
        values = np.array([[0.9, 0.5], [0.3, 0.8], [0.2, 0.2]])
        prices = np.array([[0.5, 0.4], [0.1, 0.2], [0.5, 0.5]])
        assert buyer_choice(values, prices, "lowest").tolist() == [0, 1, -1]

    def test_tie_lowest(self) -> None:
        """Equal surplus goes to seller 1 under the lowest-index rule."""
        assert buyer_choice(np.array([0.8, 0.7]), np.array([0.3, 0.2]), "lowest").tolist() == [0]

    def test_tie_split(self, rng) -> None:
        """Equal surplus is split by a fair coin."""
        values = np.tile([0.8, 0.8], (4000, 1))
        prices = np.tile([0.3, 0.3], (4000, 1))
        choices = buyer_choice(values, prices, "split", rng)
        assert set(np.unique(choices)) == {0, 1}
        assert choices.mean() == pytest.approx(0.5, abs=0.05)

    def test_zero_surplus_is_no_sale(self) -> None:
        """A buyer indifferent to buying does not buy."""
        assert buyer_choice(np.array([0.5, 0.4]), np.array([0.5, 0.4]), "lowest").tolist() == [-1]


class TestSaleProbability:
    """Exact demand under uniform values."""

    def test_symmetric_prices(self, duopoly) -> None:
        """At (0.5, 0.5) each seller sells with probability 3/8."""
        assert sale_probability(duopoly, 0, (0.5, 0.5)) == pytest.approx(0.375, abs=1e-8)
        assert sale_probability(duopoly, 1, (0.5, 0.5)) == pytest.approx(0.375, abs=1e-8)

    @pytest.mark.parametrize("prices", [(0.2, 0.7), (0.6, 0.3), (0.9, 0.1), (0.0, 1.0)])
    def test_demand_partition(self, duopoly, prices) -> None:
        """No sale happens exactly when both values are below their prices."""
        total = sale_probability(duopoly, 0, prices) + sale_probability(duopoly, 1, prices)
        assert total == pytest.approx(1.0 - prices[0] * prices[1], abs=1e-8)

    def test_matches_simulation(self, duopoly, rng) -> None:
        """Simulated sale rates agree with the integral."""
        config = MarketConfig.uniform_grid((0.1, 0.2), k=11, horizon=4000)
        log = simulate_market(config, [FixedPriceSeller(config, 0.3, rng), FixedPriceSeller(config, 0.6, rng)], rng)
        for j in range(2):
            assert log.sales[:, j].mean() == pytest.approx(sale_probability(duopoly, j, (0.3, 0.6)), abs=0.03)

    def test_point_mass_values(self) -> None:
        """With both values fixed at 1 the cheaper seller takes the buyer."""
        config = MarketConfig.uniform_grid((0.0, 0.0), values=ValueDistribution((1.0, 1.0), (1.0, 1.0)))
        assert sale_probability(config, 0, (0.3, 0.4)) == 1.0
        assert sale_probability(config, 1, (0.3, 0.4)) == 0.0
        assert sale_probability(config, 0, (1.0, 1.0)) == 0.0


class TestBenchmark:
    """Competitive and collusive reference points."""

    def test_uniform_duopoly(self, duopoly) -> None:
        """Competition settles at (0.5, 0.5); the best mutual improvement is (0.6, 0.6)."""
        bench = competitive_benchmark(duopoly)
        assert bench.converged
        assert bench.competitive_prices == pytest.approx((0.5, 0.5))
        assert bench.competitive_profits == pytest.approx((0.15, 0.1125), abs=1e-7)
        assert bench.collusive_prices == pytest.approx((0.6, 0.6))
        assert bench.collusive_profits == pytest.approx((0.16, 0.128), abs=1e-7)
        assert sum(bench.joint_max_profits) >= sum(bench.collusive_profits) - 1e-12

    def test_report_names_both_reference_pairs(self, duopoly) -> None:
        """The report says which rule picked the collusive pair and which the joint maximum."""
        report = competitive_benchmark(duopoly).to_dict()
        assert report["collusive_rule"] == COLLUSIVE_RULE
        assert "improving both sellers" in report["collusive_rule"]
        assert report["joint_max_rule"] == JOINT_MAX_RULE
        assert sum(report["joint_max_profits"]) >= sum(report["collusive_profits"]) - 1e-12

    def test_bertrand_with_split_ties(self) -> None:
        """Certain values and zero costs undercut down to the lowest positive price."""
        config = MarketConfig.uniform_grid((0.0, 0.0), tie_rule="split",
                                           values=ValueDistribution((1.0, 1.0), (1.0, 1.0)))
        bench = competitive_benchmark(config)
        assert bench.competitive_prices == pytest.approx((0.1, 0.1))

    def test_profit_tables_shape(self, duopoly) -> None:
        """One k x k table per seller; pricing at cost earns nothing."""
        pi1, pi2 = profit_tables(duopoly)
        assert pi1.shape == pi2.shape == (11, 11)
        assert np.allclose(pi1[1, :], 0.0)
        assert np.allclose(pi2[:, 2], 0.0)


class TestConfig:
    """Market configuration checks."""

    def test_problems_are_collected(self) -> None:
        """Every problem is reported at once."""
        with pytest.raises(ConfigError) as info:
            MarketConfig((0.1, 0.2), np.array([0.5, 0.3]), 0, tie_rule="coin")
        assert len(info.value.problems) == 3

    def test_top_price_above_costs(self) -> None:
        """Sellers need a price above cost."""
        with pytest.raises(ConfigError):
            MarketConfig.uniform_grid((0.1, 0.6), k=3, p_max=0.5)

    def test_from_dict(self) -> None:
        """Grid, horizon and values come from the dictionary."""
        config = market_config_from_dict({"costs": [0.0, 0.1], "k": 5, "p_max": 2.0, "horizon": 10,
                                          "values": {"low": [0, 0], "high": [2, 2]}})
        assert config.price_grid.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]
        assert config.values.high == (2.0, 2.0)

    def test_unknown_seller_type(self, duopoly, rng) -> None:
        """Seller types are validated."""
        with pytest.raises(ConfigError):
            seller_from_config({"type": "oracle"}, duopoly, 0, rng)


class TestSellers:
    """Posted-price behaviour."""

    def test_fixed_distribution(self, duopoly, rng) -> None:
        """The posted price keeps 1 - e + e / k, every other price e / k."""
        seller = FixedPriceSeller(duopoly, 0.5, rng, exploration=0.11)
        probs = seller.distribution()
        assert probs[5] == pytest.approx(0.9)
        assert np.delete(probs, 5) == pytest.approx(np.full(10, 0.01))

    def test_off_grid_price(self, duopoly, rng) -> None:
        """Prices must lie on the grid."""
        with pytest.raises(DomainError):
            FixedPriceSeller(duopoly, 0.55, rng)

    def test_grim_trigger_fires(self, duopoly, rng) -> None:
        """A full window of missed sales switches to the competitive price for good."""
        seller = GrimTriggerSeller(duopoly, 0.9, 0.5, rng, window=10, trigger_rate=0.1)
        for _ in range(9):
            seller.observe(False, 0.0)
        assert not seller.triggered
        seller.observe(False, 0.0)
        assert seller.triggered
        seller.observe(True, 0.4)
        assert seller.triggered
        assert seller.distribution()[seller.competitive_index] == 1.0

    def test_grim_trigger_competitive_from_benchmark(self, duopoly, rng) -> None:
        """Without an explicit competitive price the benchmark supplies it."""
        seller = seller_from_config({"type": "grim_trigger", "price": 0.8}, duopoly, 0, rng)
        assert duopoly.price_grid[seller.competitive_index] == pytest.approx(0.5)

    def test_bandit_sellers_run(self, rng) -> None:
        """Two learners produce a well-formed log with their sampling distributions."""
        config = MarketConfig.uniform_grid((0.1, 0.2), k=6, horizon=300)
        sellers = [BanditSdaSeller(config, 0, rng, exploration=0.2), BanditSdaSeller(config, 1, rng, exploration=0.2)]
        log = simulate_market(config, sellers, rng)
        assert log.n == 300
        assert np.all(log.sales.sum(axis=1) <= 1)
        assert log.exploration[0].min() >= 0.2 / 6 - 1e-12
        assert np.allclose(log.exploration[1].sum(axis=1), 1.0)
        assert np.all(log.profits <= log.prices)

    def test_duopoly_only(self, duopoly, rng) -> None:
        """Markets have exactly two sellers."""
        with pytest.raises(DomainError):
            simulate_market(duopoly, [FixedPriceSeller(duopoly, 0.5, rng)], rng)


class TestMarketFiles:
    """Market logs on disk."""

    def test_csv_keeps_history(self, rng, tmp_path) -> None:
        """Prices, sales and exploration columns come back unchanged."""
        config = MarketConfig.uniform_grid((0.1, 0.2), k=11, horizon=40)
        sellers = [FixedPriceSeller(config, 0.5, rng, 0.11), FixedPriceSeller(config, 0.6, rng, 0.2)]
        log = simulate_market(config, sellers, rng)
        back = read_market_csv(write_market_csv(log, str(tmp_path / "market.csv")), config)
        assert np.array_equal(back.price_indices, log.price_indices)
        assert np.array_equal(back.sales, log.sales)
        assert np.array_equal(back.exploration[0], log.exploration[0])

    def test_missing_exploration_reads_as_nan(self, rng, tmp_path) -> None:
        """A log without exploration columns is still readable."""
        config = MarketConfig.uniform_grid((0.1, 0.2), k=11, horizon=20)
        log = simulate_market(config, [FixedPriceSeller(config, 0.5, rng), FixedPriceSeller(config, 0.5, rng)], rng)
        path = tmp_path / "bare.csv"
        log.to_frame()[["round", "p1", "p2", "sale1", "sale2"]].to_csv(path, index=False)
        back = read_market_csv(str(path), config)
        assert np.isnan(back.exploration[0]).all()
