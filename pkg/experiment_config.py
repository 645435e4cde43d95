"""
JSON experiment configs, validated in full before any trial starts.

Every problem found is collected and raised together as one ConfigError.
"""
import json
import logging
from numbers import Real
from typing import Dict, List, Optional, Sequence

from codes import LearnerKind, Subcommand
from errors import ConfigError
from game_library import BUILTIN_GAMES

NUMBER = "number"
COMMON_KEYS = {"seeds": list, "out": str, "jobs": int, "name": str, "description": str}

SCHEMAS: Dict[Subcommand, Dict[str, Dict[str, object]]] = {
    Subcommand.LEARN: {"required": {"learner": dict, "stream": dict}, "optional": {"n": int, "use_distributions": bool}},
    Subcommand.BANDIT: {"required": {"learner": dict, "stream": dict, "n": int}, "optional": {"use_distributions": bool}},
    Subcommand.GAME: {"required": {"game": dict, "row_learner": dict, "col_learner": dict, "n": int}, "optional": {}},
    Subcommand.DYNAMICS: {"required": {"game": dict, "start": list, "n": int}, "optional": {}},
    Subcommand.MANIPULATE: {"required": {"game": dict, "schedule": dict, "follower": dict, "n": int},
                            "optional": {"gamma": NUMBER}},
    Subcommand.INFER: {"required": {"auction": dict, "bidder": int},
                       "optional": {"grid_points": int, "value_range": list}},
    Subcommand.AUDIT: {"required": {"market": dict, "sellers": list, "audit": dict},
                       "optional": {"seller": int, "calibration": dict}},
    Subcommand.BENCHMARK: {"required": {"market": dict}, "optional": {}},
}

STREAM_TYPES = ("ftl_trap", "ew_example", "bernoulli", "switching", "matrix", "uniform", "penalize_previous")
BIDDER_TYPES = ("truthful", "fixed", "random", "ew")
SELLER_TYPES = ("bandit_sda", "fixed", "grim_trigger")
SCHEDULE_TYPES = ("up_then_down", "static")


def _type_ok(value, expected) -> bool:
    if expected == NUMBER:
        return isinstance(value, Real) and not isinstance(value, bool)
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def _type_name(expected) -> str:
    return expected if isinstance(expected, str) else expected.__name__


def _check_keys(block: dict, required: dict, optional: dict, where: str, problems: List[str]) -> None:
    for key, expected in required.items():
        if key not in block:
            problems.append(f"{where}: missing required key '{key}'")
        elif not _type_ok(block[key], expected):
            problems.append(f"{where}.{key}: expected {_type_name(expected)}, got {type(block[key]).__name__}")
    for key, value in block.items():
        if key in required:
            continue
        if key not in optional:
            problems.append(f"{where}: unknown key '{key}'")
        elif not _type_ok(value, optional[key]):
            problems.append(f"{where}.{key}: expected {_type_name(optional[key])}, got {type(value).__name__}")


def _check_rate(value, where: str, problems: List[str]) -> None:
    if value is None or value == "auto":
        return
    if not _type_ok(value, NUMBER) or not 0 < value <= 1:
        problems.append(f"{where}: must be a number in (0, 1] or 'auto'")


def _check_learner(spec: dict, where: str, problems: List[str]) -> None:
    _check_keys(spec, {"kind": str, "k": int},
                {"h": NUMBER, "epsilon": object, "rerandomize": bool, "anytime": bool,
                 "delegate_kind": str, "exploration_epsilon": object}, where, problems)
    kinds = [kind.value for kind in LearnerKind]
    if isinstance(spec.get("kind"), str) and spec["kind"] not in kinds:
        problems.append(f"{where}.kind: '{spec['kind']}' is not one of {', '.join(kinds)}")
    if _type_ok(spec.get("k"), int) and spec["k"] < 1:
        problems.append(f"{where}.k: must be at least 1")
    if _type_ok(spec.get("h"), NUMBER) and spec["h"] <= 0:
        problems.append(f"{where}.h: must be positive")
    _check_rate(spec.get("epsilon"), f"{where}.epsilon", problems)
    _check_rate(spec.get("exploration_epsilon"), f"{where}.exploration_epsilon", problems)


def _check_game(spec: dict, where: str, problems: List[str]) -> None:
    if "builtin" in spec:
        if spec["builtin"] not in BUILTIN_GAMES:
            problems.append(f"{where}.builtin: '{spec['builtin']}' is not one of {', '.join(sorted(BUILTIN_GAMES))}")
        return
    if "path" in spec:
        if not isinstance(spec["path"], str):
            problems.append(f"{where}.path: expected str")
        return
    for key in ("row_payoffs", "col_payoffs"):
        if not isinstance(spec.get(key), list):
            problems.append(f"{where}: needs 'builtin', 'path' or both payoff matrices ('{key}' missing)")


def _check_positive(config: dict, key: str, problems: List[str]) -> None:
    if _type_ok(config.get(key), int) and config[key] < 1:
        problems.append(f"{key}: must be at least 1")


def _check_subcommand(subcommand: Subcommand, config: dict, problems: List[str]) -> None:
    _check_positive(config, "n", problems)
    if subcommand in (Subcommand.LEARN, Subcommand.BANDIT):
        if isinstance(config.get("learner"), dict):
            _check_learner(config["learner"], "learner", problems)
        stream = config.get("stream")
        if isinstance(stream, dict) and stream.get("type", "uniform") not in STREAM_TYPES:
            problems.append(f"stream.type: '{stream.get('type')}' is not one of {', '.join(STREAM_TYPES)}")
        if subcommand == Subcommand.BANDIT and isinstance(config.get("learner"), dict) \
                and "exploration_epsilon" not in config["learner"]:
            problems.append("learner: bandit runs need 'exploration_epsilon'")
    if subcommand in (Subcommand.GAME, Subcommand.DYNAMICS, Subcommand.MANIPULATE) and isinstance(config.get("game"), dict):
        _check_game(config["game"], "game", problems)
    if subcommand == Subcommand.GAME:
        for key in ("row_learner", "col_learner"):
            if isinstance(config.get(key), dict):
                _check_learner(config[key], key, problems)
    if subcommand == Subcommand.DYNAMICS and isinstance(config.get("start"), list) and len(config["start"]) != 2:
        problems.append("start: expected a pair [row action, column action]")
    if subcommand == Subcommand.MANIPULATE:
        if isinstance(config.get("follower"), dict):
            _check_learner(config["follower"], "follower", problems)
        schedule = config.get("schedule")
        if isinstance(schedule, dict) and schedule.get("type") not in SCHEDULE_TYPES:
            problems.append(f"schedule.type: expected one of {', '.join(SCHEDULE_TYPES)}")
    if subcommand == Subcommand.INFER:
        auction = config.get("auction")
        if isinstance(auction, dict):
            _check_keys(auction, {"mechanism": str, "b_max": NUMBER, "n": int, "bidders": list},
                        {"reserve": NUMBER}, "auction", problems)
            for index, bidder in enumerate(auction.get("bidders") or []):
                if not isinstance(bidder, dict) or bidder.get("type") not in BIDDER_TYPES:
                    problems.append(f"auction.bidders[{index}]: type must be one of {', '.join(BIDDER_TYPES)}")
            if isinstance(auction.get("bidders"), list) and _type_ok(config.get("bidder"), int) \
                    and not 0 <= config["bidder"] < len(auction["bidders"]):
                problems.append(f"bidder: index {config['bidder']} is outside the bidder list")
        if _type_ok(config.get("grid_points"), int) and config["grid_points"] < 1:
            problems.append("grid_points: must be at least 1")
        value_range = config.get("value_range")
        if isinstance(value_range, list) and (len(value_range) != 2 or not value_range[0] <= value_range[1]):
            problems.append("value_range: expected [low, high] with low <= high")
    if subcommand in (Subcommand.AUDIT, Subcommand.BENCHMARK) and isinstance(config.get("market"), dict):
        market = config["market"]
        _check_keys(market, {}, {"costs": list, "k": int, "p_max": NUMBER, "price_grid": list, "horizon": int,
                                 "values": dict, "tie_rule": str}, "market", problems)
    if subcommand == Subcommand.AUDIT:
        sellers = config.get("sellers")
        if isinstance(sellers, list):
            if len(sellers) != 2:
                problems.append(f"sellers: a duopoly needs exactly two sellers, got {len(sellers)}")
            for index, seller in enumerate(sellers):
                if not isinstance(seller, dict) or seller.get("type", "bandit_sda") not in SELLER_TYPES:
                    problems.append(f"sellers[{index}]: type must be one of {', '.join(SELLER_TYPES)}")
        audit = config.get("audit")
        if isinstance(audit, dict):
            _check_keys(audit, {"alpha_min": NUMBER, "r_bar": NUMBER, "delta": NUMBER},
                        {"cost_grid_size": int, "known_cost": NUMBER, "regret_kind": str, "radius_constant": NUMBER,
                         "threshold_factor": NUMBER, "decision_rule": str}, "audit", problems)
        if config.get("seller", 0) not in (0, 1):
            problems.append("seller: must be 0 or 1")


def validate_experiment_config(config: dict, subcommand) -> dict:
    """Checks a parsed config against its subcommand's schema; returns it unchanged."""
    try:
        subcommand = Subcommand(subcommand)
    except ValueError:
        raise ConfigError(f"Unknown subcommand '{subcommand}'", [f"valid: {', '.join(s.value for s in Subcommand)}"])
    problems: List[str] = []
    if not isinstance(config, dict):
        raise ConfigError("Invalid experiment config", ["top level must be a JSON object"])
    schema = SCHEMAS[subcommand]
    _check_keys(config, schema["required"], {**schema["optional"], **COMMON_KEYS}, "config", problems)
    seeds = config.get("seeds")
    if isinstance(seeds, list) and not all(_type_ok(s, int) for s in seeds):
        problems.append("config.seeds: every seed must be an integer")
    _check_subcommand(subcommand, config, problems)
    if problems:
        for problem in problems:
            logging.error(f"Config problem: {problem}")
        raise ConfigError(f"Invalid {subcommand.value} config", problems)
    return config


def load_experiment_config(path: str, subcommand) -> dict:
    try:
        with open(path) as f:
            config = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON", [str(e)])
    return validate_experiment_config(config, subcommand)


def parse_seeds(text: Optional[str]) -> Optional[List[int]]:
    """'1,2,3' -> [1, 2, 3]; '0:4' -> [0, 1, 2, 3]; None -> None; '' -> []."""
    if text is None:
        return None
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            start, stop = text.split(":", 1)
            return list(range(int(start), int(stop)))
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"Cannot parse seeds '{text}'", ["use a comma list such as 1,2,3 or a range such as 0:10"])


def resolve_seeds(config: dict, cli_seeds: Optional[Sequence[int]]) -> List[int]:
    seeds = list(cli_seeds) if cli_seeds is not None else list(config.get("seeds", []))
    if not seeds:
        raise ConfigError("No seeds to run", ["pass --seeds or list 'seeds' in the config"])
    if len(set(seeds)) != len(seeds):
        raise ConfigError("Seeds must be distinct", [f"got {seeds}"])
    return seeds
