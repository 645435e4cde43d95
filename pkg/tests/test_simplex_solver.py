"""Tests for the two-phase simplex solver against scipy's HiGHS."""

import numpy as np
import pytest
from scipy.optimize import linprog

from simplex_solver import INFEASIBLE, OPTIMAL, UNBOUNDED, maximize


class TestMaximize:
    """Optimal values, infeasibility and unboundedness."""

    def test_textbook_problem(self) -> None:
        """max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 has optimum 36 at (2, 6)."""
        result = maximize([3, 5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18])
        assert result.status == OPTIMAL
        assert result.objective == pytest.approx(36.0)
        assert result.x == pytest.approx([2.0, 6.0])

    def test_matches_linprog_on_random_problems(self, rng) -> None:
        """Random bounded feasible programs agree with HiGHS."""
        for _ in range(25):
            n_vars, n_rows = rng.integers(2, 6), rng.integers(1, 6)
            c = rng.normal(size=n_vars)
            a_ub = rng.random((n_rows, n_vars)) + 0.1
            b_ub = rng.random(n_rows) + 0.5
            a_eq = np.ones((1, n_vars))
            b_eq = [min(1.0, float(b_ub.min()) / float(a_ub.max()))]
            ours = maximize(c, a_ub, b_ub, a_eq, b_eq)
            reference = linprog(-c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
            assert reference.status == 0
            assert ours.status == OPTIMAL
            assert ours.objective == pytest.approx(-reference.fun, abs=1e-7)
            assert ours.residual <= 1e-8

    def test_infeasible(self) -> None:
        """x <= 1 and x = 2 cannot both hold."""
        result = maximize([1.0], [[1.0]], [1.0], [[1.0]], [2.0])
        assert result.status == INFEASIBLE
        assert not result.success

    def test_unbounded(self) -> None:
        """x - y <= 1 leaves x + y free to grow."""
        result = maximize([1.0, 1.0], [[1.0, -1.0]], [1.0])
        assert result.status == UNBOUNDED
        assert result.x is None

    def test_redundant_equalities(self) -> None:
        """A repeated equality row is dropped after phase one."""
        result = maximize([1.0, 2.0], A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0])
        assert result.status == OPTIMAL
        assert result.objective == pytest.approx(2.0)

    def test_negative_right_hand_side(self) -> None:
        """-x <= -1 means x >= 1."""
        result = maximize([-1.0], [[-1.0]], [-1.0])
        assert result.status == OPTIMAL
        assert result.x == pytest.approx([1.0])
