"""Run several predictors on the same sequences and score them.

A config is a plain dict (usually loaded from JSON)::

    {
      "alpha": 2.0,
      "seed": 0,
      "T": 64,
      "games": 10,
      "input": {"generator": {"kind": "low-height-blocks", "x": 16, "c": 0.5}},
      "algorithms": ["interval-mc", "wm", "const+", {"replay": "run.csv"}]
    }

``input`` is one of ``{"generator": {...}}``, ``{"file": path}`` or
``{"prices": path, "values": "bits"|"returns"}``.  Game ``g`` uses seed
``seed + g`` both for the generated input and for the randomized
predictors, so every number in the report is reproducible from the
config alone.  Only ``timing`` varies between runs.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .baselines import Constant, WeightedMajority, best_expert_hindsight, best_partition_expert_payoff
from .harness import GeneratorSpec, generate, ingest_prices, read_prediction_log
from .payoff import aligned_payoff_value, payoff_dp, payoff_value
from .predictor import EXACT_MAX_T, IntervalPredictor, MagnitudeModel, run_game
from .sequence import is_power_of_two, read_sequence

SCHEMA_VERSION = 1
ALGORITHMS = ("interval-mc", "interval-aligned", "interval-exact", "interval-real",
              "wm", "const+", "const-")


CSV_COLUMNS = ["game", "seed", "T", "algorithm", "payoff", "P_alpha", "slack_vs_P_alpha",
               "best_expert", "regret_to_best_expert", "clamp_count"]


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid config:\n  " + "\n  ".join(errors))


@dataclass
class _Input:
    kind: str
    spec: GeneratorSpec | None = None
    values: np.ndarray | None = None


def _validate(config: dict) -> list[str]:
    errs = []
    alpha = config.get("alpha")
    if not isinstance(alpha, (int, float)) or not alpha > 0 or not math.isfinite(alpha):
        errs.append("alpha must be a positive number")
    if not isinstance(config.get("seed", 0), int):
        errs.append("seed must be an integer")
    games = config.get("games", 1)
    if not isinstance(games, int) or games < 1:
        errs.append("games must be a positive integer")
    inp = config.get("input")
    if not isinstance(inp, dict) or len(set(inp) & {"generator", "file", "prices"}) != 1:
        errs.append("input must contain exactly one of 'generator', 'file', 'prices'")
    elif "generator" in inp:
        g = dict(inp["generator"])
        errs += GeneratorSpec(g.pop("kind", "?"), 0, g).validate()
        if not isinstance(config.get("T"), int) or config["T"] < 1:
            errs.append("T must be a positive integer when a generator is used")
    algos = config.get("algorithms")
    if not algos:
        errs.append("algorithms must be a non-empty list")
    for a in algos or ():
        if isinstance(a, dict):
            if set(a) != {"replay"}:
                errs.append(f"algorithm entry {a} must be {{'replay': path}}")
        elif a not in ALGORITHMS:
            errs.append(f"unknown algorithm {a!r}; expected one of {ALGORITHMS}")
    if "interval-real" in (algos or ()):
        model = config.get("magnitudes", "point-mass-one")
        if model not in MagnitudeModel.KINDS[:2]:
            errs.append(f"magnitudes must be one of {MagnitudeModel.KINDS[:2]}")
    return errs


def _load_input(config: dict) -> _Input:
    inp = config["input"]
    if "generator" in inp:
        g = dict(inp["generator"])
        kind = g.pop("kind")
        return _Input("generator", GeneratorSpec(kind, 0, g))
    if "file" in inp:
        return _Input("file", values=read_sequence(inp["file"], bounded=False))
    series = ingest_prices(inp["prices"])
    vals = series.clipped if inp.get("values", "bits") == "returns" else series.bits
    return _Input("prices", values=vals)


def _make_algorithm(name: str, T: int, alpha: float, seed: int, config: dict):
    if name == "wm":
        return WeightedMajority(T, config.get("eta"))
    if name == "const+":
        return Constant(1.0, T)
    if name == "const-":
        return Constant(-1.0, T)
    mode = name.split("-", 1)[1]
    model = MagnitudeModel(config.get("magnitudes", "point-mass-one")) if mode == "real" else None
    return IntervalPredictor(T, alpha, mode, seed, model)


def _algo_name(a) -> str:
    return a if isinstance(a, str) else f"replay:{a['replay']}"


def run_experiment(config: dict) -> dict:
    """Play every configured algorithm on the configured sequence(s) and score them."""
    errs = _validate(config)
    if errs:
        raise ConfigError(errs)
    alpha = float(config["alpha"])
    seed = int(config.get("seed", 0))
    games = int(config.get("games", 1))
    src = _load_input(config)
    if src.kind != "generator" and games != 1:
        raise ConfigError(["games > 1 requires a generator input"])

    started = time.perf_counter()
    records = []
    names = [_algo_name(a) for a in config["algorithms"]]
    for g in range(games):
        game_seed = seed + g
        if src.kind == "generator":
            seq = generate(GeneratorSpec(src.spec.kind, game_seed, src.spec.params), int(config["T"]))
        else:
            seq = src.values
        T = seq.shape[0]
        late = [f"{n} needs T <= {EXACT_MAX_T}" for n in names if n == "interval-exact" and T > EXACT_MAX_T]
        late += [f"{n} needs T a power of two" for n in names
                 if n == "interval-aligned" and not is_power_of_two(T)]
        if late:
            raise ConfigError(late)

        p_value, part, _ = payoff_dp(seq, alpha) if T <= 512 else (payoff_value(seq, alpha), None, None)
        rec = {
            "seed": game_seed,
            "T": T,
            "height": float(np.sum(seq)),
            "P_alpha": float(p_value),
            "P_alpha_aligned": float(aligned_payoff_value(seq, alpha)) if is_power_of_two(T) else None,
            "best_expert": best_expert_hindsight(seq),
            "partition_k": len(part) if part is not None else None,
            "best_partition_expert": best_partition_expert_payoff(seq, part) if part is not None else None,
            "algorithms": {},
        }
        for a, name in zip(config["algorithms"], names):
            if isinstance(a, dict):
                lg = read_prediction_log(a["replay"])
                if lg.observed.shape != seq.shape or not np.array_equal(lg.observed, seq):
                    raise ConfigError([f"{name}: logged observations do not match the input sequence"])
                payoff, clamps = lg.score(), int(lg.clamped.sum())
            else:
                res = run_game(_make_algorithm(a, T, alpha, game_seed, config), seq)
                payoff, clamps = float(res.payoff), res.clamp_count
            rec["algorithms"][name] = {
                "payoff": payoff,
                "clamp_count": clamps,
                "regret_to_best_expert": rec["best_expert"] - payoff,
                "slack_vs_P_alpha": payoff - rec["P_alpha"],
            }
        records.append(rec)

    summary = {}
    for name in names:
        pay = np.array([r["algorithms"][name]["payoff"] for r in records])
        slack = np.array([r["algorithms"][name]["slack_vs_P_alpha"] for r in records])
        n = len(records)
        summary[name] = {
            "mean_payoff": float(pay.mean()),
            "mean_slack_vs_P_alpha": float(slack.mean()),
            "slack_stderr": float(slack.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
            "games": n,
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "seed": seed,
        "alpha": alpha,
        "games": records,
        "summary": summary,
        "mean_P_alpha": float(np.mean([r["P_alpha"] for r in records])),
        "timing": {"wall_seconds": time.perf_counter() - started},
    }


def write_experiment_csv(path, report: dict) -> None:
    """One row per (game, algorithm) pair."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for g, rec in enumerate(report["games"]):
            for name, r in rec["algorithms"].items():
                w.writerow([g, rec["seed"], rec["T"], name, *(repr(float(v)) for v in (
                    r["payoff"], rec["P_alpha"], r["slack_vs_P_alpha"], rec["best_expert"],
                    r["regret_to_best_expert"])), r["clamp_count"]])
