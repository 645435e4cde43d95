import asyncio
import json
import logging
import os
from typing import Callable, Dict, List, Sequence

import numpy as np
import pandas as pd

from codes import Subcommand
from game_dynamics import BimatrixGame
from game_library import game_from_dict, load_game

TrialFunction = Callable[[dict, int, str], Dict[str, object]]


# --- Helper Functions ---
def _plain(value):
    """json.dump fallback for numpy scalars and arrays."""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"Cannot serialize {type(value).__name__}")


def write_json(data: dict, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, default=_plain)
    return path


def write_frame(frame: pd.DataFrame, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def resolve_game(spec: dict) -> BimatrixGame:
    """A game block is {"path": file}, {"builtin": name, ...} or explicit matrices."""
    if "path" in spec:
        return load_game(spec["path"])
    return game_from_dict(spec)


def with_default_ceiling(spec: dict, payoffs: np.ndarray) -> dict:
    """Learner spec with h defaulting to the payoff range of its side of the game."""
    if "h" in spec:
        return spec
    return {**spec, "h": float(np.ptp(payoffs)) or 1.0}


def summary_line(subcommand: Subcommand, row: dict) -> str:
    parts = []
    for key, value in row.items():
        if key == "seed":
            continue
        if isinstance(value, float):
            parts.append(f"{key}={value:.6g}")
        else:
            parts.append(f"{key}={value}")
    return f"{subcommand.value} seed={row['seed']}: " + " ".join(parts)


def write_summary(base_dir: str, rows: List[dict]) -> None:
    write_frame(pd.DataFrame(rows), os.path.join(base_dir, "summary.csv"))
    write_json({"trials": rows}, os.path.join(base_dir, "summary.json"))


async def run_trials(
    subcommand: Subcommand,
    trial: TrialFunction,
    config: dict,
    seeds: Sequence[int],
    jobs: int,
    out_root: str,
) -> List[dict]:
    """
    Runs one trial per seed on worker threads, at most `jobs` at a time.

    Each trial writes into <out>/<subcommand>/seed_<s>/. Results come back
    in seed order, so the merged summary does not depend on `jobs`.
    """
    base_dir = os.path.join(out_root, subcommand.value)
    semaphore = asyncio.Semaphore(max(1, jobs))

    async def run_one(seed: int) -> dict:
        async with semaphore:
            trial_dir = os.path.join(base_dir, f"seed_{seed}")
            os.makedirs(trial_dir, exist_ok=True)
            logging.info(f"Starting {subcommand.value} trial with seed {seed}")
            row = await asyncio.to_thread(trial, config, seed, trial_dir)
            return {"seed": seed, **row}

    rows = await asyncio.gather(*(run_one(seed) for seed in seeds))
    for row in rows:
        print(summary_line(subcommand, row), flush=True)
    write_summary(base_dir, list(rows))
    logging.info(f"Finished {len(rows)} {subcommand.value} trial(s); summary in {base_dir}")
    return list(rows)
