import os

from errors import ConfigError
from game_dynamics import BimatrixGame, best_response_dynamics, epsilon_cce
from handlers.common import resolve_game, write_frame, write_json

SHOWN_PAIRS = 12


def _action_index(labels, value, side: str) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    if value in labels:
        return labels.index(value)
    raise ConfigError(f"start: '{value}' is not a {side} action ({', '.join(labels)})")


def parse_start(game: BimatrixGame, start) -> tuple:
    return (_action_index(list(game.row_labels), start[0], "row"),
            _action_index(list(game.col_labels), start[1], "column"))


def run_trial(config: dict, seed: int, trial_dir: str) -> dict:
    """Deterministic best-response dynamics; the seed only names the artifact folder."""
    game = resolve_game(config["game"])
    start = parse_start(game, config["start"])
    trace = best_response_dynamics(game, start, int(config["n"]))
    frame = trace.to_frame(game)
    write_frame(frame, os.path.join(trial_dir, "trace.csv"))
    write_json({"game": game.name, "start": list(start), "pairs": [list(p) for p in trace.pairs],
                "cce": epsilon_cce(game, trace.joint).to_dict()}, os.path.join(trial_dir, "report.json"))
    shown = " ".join(f"({a},{b})" for a, b in zip(frame["a"][:SHOWN_PAIRS], frame["b"][:SHOWN_PAIRS]))
    return {"n": len(trace.pairs), "trace": shown}
