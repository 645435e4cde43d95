import json
import logging
import os

import numpy as np

from errors import DomainError
from game_dynamics import BimatrixGame


def no_tie_rps() -> BimatrixGame:
    """Rock-paper-scissors where a tie costs both players 6; symmetric."""
    row = np.array([[-6.0, -1.0, 1.0],
                    [1.0, -6.0, -1.0],
                    [-1.0, 1.0, -6.0]])
    return BimatrixGame(row, row.T, ("R", "P", "S"), ("R", "P", "S"), "no-tie-rps")


def matching_pennies() -> BimatrixGame:
    row = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return BimatrixGame(row, -row, ("H", "T"), ("H", "T"), "matching-pennies")


def prisoners_dilemma() -> BimatrixGame:
    row = np.array([[3.0, 0.0], [5.0, 1.0]])
    return BimatrixGame(row, row.T, ("C", "D"), ("C", "D"), "prisoners-dilemma")


def mean_based_trap(epsilon: float = 0.1) -> BimatrixGame:
    """
    Leader (row) Up/Down against follower Left/Mid/Right.

    Stackelberg value 0, yet a leader who plays Up then Down earns about
    one per round from a mean-based follower.
    """
    leader = np.array([[0.0, -2.0, -2.0],
                       [0.0, -2.0, 2.0]])
    follower = np.array([[epsilon, -1.0, 0.0],
                         [-1.0, 1.0, 0.0]])
    return BimatrixGame(leader, follower, ("Up", "Down"), ("Left", "Mid", "Right"), f"mean-based-trap(eps={epsilon})")


def slow_rate_game(epsilon: float = 0.01) -> BimatrixGame:
    """Stackelberg value 0 with OSV(Left, r) = r / epsilon for r <= epsilon."""
    leader = np.array([[1.0, 0.0], [0.0, 0.0]])
    follower = np.array([[0.0, epsilon], [0.0, 0.0]])
    return BimatrixGame(leader, follower, ("Up", "Down"), ("Left", "Right"), f"slow-rate(eps={epsilon})")


BUILTIN_GAMES = {
    "no_tie_rps": no_tie_rps,
    "matching_pennies": matching_pennies,
    "prisoners_dilemma": prisoners_dilemma,
    "mean_based_trap": mean_based_trap,
    "slow_rate": slow_rate_game,
}


def game_to_dict(game: BimatrixGame) -> dict:
    return {
        "name": game.name,
        "row_labels": list(game.row_labels),
        "col_labels": list(game.col_labels),
        "row_payoffs": game.row_payoffs.tolist(),
        "col_payoffs": game.col_payoffs.tolist(),
    }


def game_from_dict(data: dict) -> BimatrixGame:
    """
    Builds a game from {"builtin": name, "epsilon": ...} or from explicit
    row/col matrices in (row action, column action) indexing.
    """
    if "builtin" in data:
        factory = BUILTIN_GAMES.get(data["builtin"])
        if factory is None:
            raise DomainError(f"Unknown builtin game: {data['builtin']}")
        return factory(float(data["epsilon"])) if "epsilon" in data else factory()
    try:
        return BimatrixGame(data["row_payoffs"], data["col_payoffs"],
                            data.get("row_labels"), data.get("col_labels"), data.get("name", "game"))
    except KeyError as e:
        raise DomainError(f"Game document is missing {e}") from e


def save_game(game: BimatrixGame, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(game_to_dict(game), f, indent=2)
    return path


def load_game(path: str) -> BimatrixGame:
    with open(path) as f:
        game = game_from_dict(json.load(f))
    logging.info(f"Loaded game '{game.name}' ({game.n_rows}x{game.n_cols}) from {path}")
    return game
