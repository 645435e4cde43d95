"""
Dense two-phase tableau simplex with Bland's rule.

Solves   maximize c.x   subject to   A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0
for the desk-scale programs behind Stackelberg values.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from errors import DomainError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LinearProgramResult:
    status: str
    x: Optional[np.ndarray]
    objective: float
    iterations: int
    residual: float

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]


def _iterate(tableau: np.ndarray, basis: List[int], cost: np.ndarray, n_cols: int, tol: float, max_iter: int, used: int):
    """Runs simplex pivots until optimal; returns (status, iterations used)."""
    iterations = used
    while iterations < max_iter:
        reduced = cost[basis] @ tableau[:, :n_cols] - cost[:n_cols]
        entering = np.flatnonzero(reduced < -tol)
        if entering.size == 0:
            return OPTIMAL, iterations
        col = int(entering[0])  # Bland: lowest index
        column = tableau[:, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            return UNBOUNDED, iterations
        ratios = tableau[rows, -1] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))  # Bland: lowest leaving index
        _pivot(tableau, row, col)
        basis[row] = col
        iterations += 1
    return ITERATION_LIMIT, iterations


def _as_rows(a, b, nx: int, name: str):
    if a is None:
        return np.zeros((0, nx)), np.zeros(0)
    a = np.array(a, dtype=float).reshape(-1, nx)
    b = np.array(b, dtype=float).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise DomainError(f"{name}: {a.shape[0]} rows but {b.shape[0]} right-hand sides")
    return a, b


def maximize(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    tol: float = 1e-9,
    max_iter: int = 10000,
) -> LinearProgramResult:
    """
    Maximizes c.x over the polyhedron with x >= 0.

    Phase one drives an artificial variable per row to zero; artificials
    left in the basis at level zero are pivoted out or their redundant rows
    dropped. Phase two then optimizes c from that basis.
    """
    c = np.array(c, dtype=float).reshape(-1)
    nx = c.shape[0]
    A_ub, b_ub = _as_rows(A_ub, b_ub, nx, "A_ub")
    A_eq, b_eq = _as_rows(A_eq, b_eq, nx, "A_eq")
    m_ub, m = A_ub.shape[0], A_ub.shape[0] + A_eq.shape[0]
    n_real = nx + m_ub
    n_all = n_real + m

    tableau = np.zeros((m, n_all + 1))
    tableau[:m_ub, :nx] = A_ub
    tableau[:m_ub, nx:n_real] = np.eye(m_ub)
    tableau[:m_ub, -1] = b_ub
    tableau[m_ub:, :nx] = A_eq
    tableau[m_ub:, -1] = b_eq
    tableau[tableau[:, -1] < 0] *= -1.0
    tableau[:, n_real:n_all] = np.eye(m)
    basis = list(range(n_real, n_all))

    phase_one = np.zeros(n_all)
    phase_one[n_real:] = -1.0
    status, iterations = _iterate(tableau, basis, phase_one, n_all, tol, max_iter, 0)
    if status == ITERATION_LIMIT:
        return LinearProgramResult(status, None, float("nan"), iterations, float("inf"))
    infeasibility = -float(phase_one[basis] @ tableau[:, -1])
    scale = max(1.0, float(np.abs(tableau[:, -1]).max(initial=0.0)))
    if infeasibility > 1e3 * tol * scale:
        logging.debug(f"LP infeasible: phase one ended at {infeasibility:.3e}")
        return LinearProgramResult(INFEASIBLE, None, float("-inf"), iterations, infeasibility)

    keep = []
    for i in range(len(basis)):
        if basis[i] < n_real:
            keep.append(i)
            continue
        candidates = np.flatnonzero(np.abs(tableau[i, :n_real]) > tol)
        if candidates.size:
            _pivot(tableau, i, int(candidates[0]))
            basis[i] = int(candidates[0])
            keep.append(i)
    tableau = np.hstack([tableau[keep, :n_real], tableau[keep, -1:]])
    basis = [basis[i] for i in keep]

    phase_two = np.concatenate([c, np.zeros(m_ub)])
    status, iterations = _iterate(tableau, basis, phase_two, n_real, tol, max_iter, iterations)
    values = np.zeros(n_real)
    values[basis] = tableau[:, -1]
    x = np.clip(values[:nx], 0.0, None)
    residual = 0.0
    if m_ub:
        residual = max(residual, float(np.max(A_ub @ x - b_ub, initial=0.0)))
    if A_eq.shape[0]:
        residual = max(residual, float(np.max(np.abs(A_eq @ x - b_eq))))
    if status == UNBOUNDED:
        return LinearProgramResult(status, None, float("inf"), iterations, residual)
    return LinearProgramResult(status, x, float(c @ x), iterations, residual)
