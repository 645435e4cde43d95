"""Tests for the swap-regret audit of a seller's market log."""

import math
import os

import numpy as np
import pytest

from codes import Verdict
from collusion_audit import (
    AuditParams, audit_swap_regret, counterfactual_sales, decide, estimated_sales, required_rounds,
)
from errors import ConfigError, NotAuditableError
from experiment_config import load_experiment_config
from handlers.audit import market_for_audit
from market_simulator import FixedPriceSeller, MarketConfig, seller_from_config, simulate_market

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


class SilentSeller(FixedPriceSeller):
    """Posts a price without disclosing how it randomizes."""

    def distribution(self):
        return None

    def act(self) -> int:
        return int(self.rng.choice(self.k, p=super().distribution()))


def fixed_market(own: float, rival: float, exploration: float, n: int, seed: int = 0):
    config = MarketConfig.uniform_grid((0.1, 0.2), k=11, horizon=n)
    rng = np.random.default_rng(seed)
    sellers = [FixedPriceSeller(config, own, rng, exploration), FixedPriceSeller(config, rival, rng, 0.0)]
    return simulate_market(config, sellers, rng)


def shipped_trial_verdicts(name: str, seeds) -> list:
    """Runs the shipped audit config once per seed and returns the verdicts."""
    config = load_experiment_config(os.path.join(CONFIG_DIR, name), "audit")
    market = market_for_audit(config)
    params = AuditParams(**config["audit"])
    verdicts = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        sellers = [seller_from_config(spec, market, j, rng) for j, spec in enumerate(config["sellers"])]
        log = simulate_market(market, sellers, rng)
        verdicts.append(audit_swap_regret(log, int(config["seller"]), params).verdict)
    return verdicts


class TestRequiredRounds:
    """The calibrated horizon."""

    def test_formula(self) -> None:
        """k = 11, p_max = 1, alpha_min = 0.01, r_bar = 0.05, delta = 0.1 needs about 2.3e5 rounds."""
        n = required_rounds(11, 1.0, 0.01, 0.05, 0.1, 1e-4)
        assert n == math.ceil(1e-4 * (11 / (0.01 * 0.05)) ** 2 * math.log(110))
        assert 227000 < n < 228000

    def test_shipped_horizon(self) -> None:
        """Both shipped audit configs resolve to the same calibrated horizon."""
        horizons = {market_for_audit(load_experiment_config(os.path.join(CONFIG_DIR, name), "audit")).horizon
                    for name in ("audit_competitive.json", "audit_fixed_high.json")}
        assert horizons == {required_rounds(11, 1.0, 0.01, 0.05, 0.1, 1e-4)}

    def test_grows_as_tolerance_shrinks(self) -> None:
        """Halving r_bar quadruples the rounds."""
        assert required_rounds(11, 1.0, 0.01, 0.025, 0.1, 1.0) == pytest.approx(
            4 * required_rounds(11, 1.0, 0.01, 0.05, 0.1, 1.0), rel=1e-6)


class TestParams:
    """Audit parameter checks."""

    def test_problems_are_collected(self) -> None:
        """Every bad field is reported."""
        with pytest.raises(ConfigError) as info:
            AuditParams(alpha_min=0.0, r_bar=-1.0, delta=1.5, regret_kind="internal")
        assert len(info.value.problems) == 4

    def test_threshold(self) -> None:
        """The pass threshold is 1.5 r_bar."""
        assert AuditParams(0.01, 0.05, 0.1).threshold == pytest.approx(0.075)


class TestEstimatedSales:
    """Counterfactual sales from the seller's own randomization."""

    def test_only_played_price_is_nonzero(self) -> None:
        """Each round credits sale / probability to the posted price only."""
        log = fixed_market(0.5, 0.5, 0.11, 200)
        estimates = estimated_sales(log, 0)
        played = log.price_indices[:, 0]
        mask = np.ones_like(estimates, dtype=bool)
        mask[np.arange(log.n), played] = False
        assert not estimates[mask].any()
        probs = log.exploration[0][np.arange(log.n), played]
        assert estimates[np.arange(log.n), played] == pytest.approx(log.sales[:, 0] / probs)

    def test_unbiased_against_ground_truth(self) -> None:
        """Column means agree with the sales recomputed from the buyer values."""
        log = fixed_market(0.5, 0.5, 0.5, 20000, seed=3)
        estimated = estimated_sales(log, 0).mean(axis=0)
        truth = counterfactual_sales(log, 0).mean(axis=0)
        assert estimated == pytest.approx(truth, abs=0.1)

    def test_ground_truth_needs_values(self) -> None:
        """Logs without buyer values have no ground truth."""
        log = fixed_market(0.5, 0.5, 0.11, 10)
        bare = type(log)(log.config, log.price_indices, log.sales, log.exploration)
        with pytest.raises(NotAuditableError):
            counterfactual_sales(bare, 0)


class TestAudit:
    """Pass and fail decisions."""

    def test_best_response_pricing_passes(self) -> None:
        """Posting the competitive price against a competitive rival passes."""
        log = fixed_market(0.5, 0.5, 0.11, 40000, seed=1)
        report = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1))
        assert report.verdict == Verdict.PASS
        assert report.passed
        assert report.r_swap <= report.threshold
        assert report.regret_by_cost.shape == (101,)

    @pytest.mark.slow
    def test_supra_competitive_pricing_fails(self) -> None:
        """Holding 0.9 against a rival at 0.5 leaves about 0.1 of swap regret on the table."""
        log = fixed_market(0.9, 0.5, 0.11, 60000, seed=2)
        report = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1, known_cost=0.1))
        assert report.r_swap == pytest.approx(0.10, abs=0.03)
        assert report.verdict == Verdict.FAIL
        assert report.to_dict()["verdict"] == "fail"

    def test_unknown_cost_is_no_larger(self) -> None:
        """Minimizing over candidate costs never exceeds the regret at the true cost."""
        log = fixed_market(0.7, 0.5, 0.11, 5000, seed=4)
        known = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1, known_cost=0.1))
        unknown = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1))
        assert unknown.r_swap <= known.r_swap + 1e-9
        assert unknown.cost_grid.size == 101

    def test_verdict_monotone_in_tolerance(self) -> None:
        """A looser tolerance never turns a pass into a fail."""
        log = fixed_market(0.7, 0.5, 0.11, 5000, seed=5)
        verdicts = [audit_swap_regret(log, 0, AuditParams(0.01, r_bar, 0.1)).passed for r_bar in (0.001, 0.01, 0.05, 0.5)]
        assert verdicts == sorted(verdicts)
        assert verdicts[-1]

    def test_external_below_swap(self) -> None:
        """External regret is at most swap regret at the same cost."""
        log = fixed_market(0.7, 0.5, 0.11, 5000, seed=6)
        swap = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1, known_cost=0.1))
        external = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1, known_cost=0.1, regret_kind="external"))
        assert external.r_swap <= swap.r_swap + 1e-12

    def test_short_log_is_underpowered(self) -> None:
        """A few hundred rounds cannot resolve r_bar = 0.05."""
        log = fixed_market(0.5, 0.5, 0.11, 300, seed=7)
        assert audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1)).underpowered

    @pytest.mark.slow
    def test_unknown_cost_rationalizes_fixed_high_price(self) -> None:
        """Holding 0.9 passes when the cost is inferred but fails at the true cost 0.1."""
        log = fixed_market(0.9, 0.5, 0.15, 60000, seed=11)
        unknown = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1))
        known = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1, known_cost=0.1))
        assert unknown.verdict == Verdict.PASS
        assert unknown.cost_hat > 0.5
        assert unknown.r_swap < 0.05
        assert known.verdict == Verdict.FAIL


class TestDecisionRule:
    """Point estimate against lower confidence bound."""

    def test_point_ignores_radius(self) -> None:
        """Only the estimate is compared."""
        assert decide(0.08, 0.5, 0.075, "point") == Verdict.FAIL
        assert decide(0.075, 0.0, 0.075, "point") == Verdict.PASS

    def test_lower_bound_subtracts_radius(self) -> None:
        """Fails only when the estimate clears the threshold by more than the radius."""
        assert decide(0.08, 0.01, 0.075, "lower_bound") == Verdict.PASS
        assert decide(0.09, 0.01, 0.075, "lower_bound") == Verdict.FAIL

    def test_unknown_rule(self) -> None:
        """Rules are validated both in the helper and in the parameters."""
        with pytest.raises(ConfigError):
            decide(0.1, 0.0, 0.075, "majority")
        with pytest.raises(ConfigError) as info:
            AuditParams(0.01, 0.05, 0.1, decision_rule="majority")
        assert any("decision_rule" in p for p in info.value.problems)

    def test_rules_split_on_same_log(self) -> None:
        """With the threshold inside the confidence interval the two rules disagree."""
        log = fixed_market(1.0, 0.5, 0.11, 5000, seed=8)
        first = audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1, known_cost=0.1))
        assert first.r_swap > 0 and first.radius > 0
        threshold = first.r_swap - min(first.radius, first.r_swap) / 2
        point = audit_swap_regret(log, 0, AuditParams(0.01, threshold / 1.5, 0.1, known_cost=0.1))
        lower = audit_swap_regret(log, 0, AuditParams(0.01, threshold / 1.5, 0.1, known_cost=0.1,
                                                      decision_rule="lower_bound"))
        assert point.r_swap == pytest.approx(lower.r_swap)
        assert point.verdict == Verdict.FAIL
        assert lower.verdict == Verdict.PASS
        assert lower.to_dict()["parameters"]["decision_rule"] == "lower_bound"

    def test_lower_bound_never_stricter(self) -> None:
        """Whatever the point rule passes, the lower-bound rule passes too."""
        log = fixed_market(0.7, 0.5, 0.11, 5000, seed=5)
        for r_bar in (0.001, 0.01, 0.05, 0.5):
            point = audit_swap_regret(log, 0, AuditParams(0.01, r_bar, 0.1))
            lower = audit_swap_regret(log, 0, AuditParams(0.01, r_bar, 0.1, decision_rule="lower_bound"))
            assert lower.passed or not point.passed


@pytest.mark.slow
class TestCalibratedTrials:
    """Fifty seeded trials per shipped audit config at the calibrated horizon."""

    def test_bandit_swap_seller_passes(self) -> None:
        """Bandit-wrapped SDA pricing passes in at least 90% of trials."""
        verdicts = shipped_trial_verdicts("audit_competitive.json", range(50))
        assert sum(v == Verdict.PASS for v in verdicts) >= 45

    def test_fixed_high_seller_fails(self) -> None:
        """A seller stuck at 0.9 fails in at least 90% of trials at the known cost."""
        verdicts = shipped_trial_verdicts("audit_fixed_high.json", range(50))
        assert sum(v == Verdict.FAIL for v in verdicts) >= 45


class TestNotAuditable:
    """Logs the audit refuses."""

    def test_missing_exploration(self) -> None:
        """A seller that hides its distribution cannot be audited."""
        config = MarketConfig.uniform_grid((0.1, 0.2), k=11, horizon=50)
        rng = np.random.default_rng(0)
        sellers = [SilentSeller(config, 0.5, rng, 0.11), FixedPriceSeller(config, 0.5, rng)]
        log = simulate_market(config, sellers, rng)
        assert np.isnan(log.exploration[0]).all()
        with pytest.raises(NotAuditableError):
            audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1))

    def test_exploration_below_floor(self) -> None:
        """Exploring 0.05 over eleven prices falls under alpha_min = 0.01."""
        log = fixed_market(0.5, 0.5, 0.05, 50)
        with pytest.raises(NotAuditableError):
            audit_swap_regret(log, 0, AuditParams(0.01, 0.05, 0.1))

    def test_seller_index(self) -> None:
        """Only sellers 0 and 1 exist."""
        log = fixed_market(0.5, 0.5, 0.11, 20)
        with pytest.raises(ConfigError):
            audit_swap_regret(log, 2, AuditParams(0.01, 0.05, 0.1))
