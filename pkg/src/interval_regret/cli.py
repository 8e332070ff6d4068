"""Command line interface: ``interval-regret <command> ...``.

Exit status is 0 on success, 1 on invalid input or configuration and 2 on
any other runtime failure.  ``--seed`` defaults to ``$INTERVAL_REGRET_SEED``
(or 0).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .baselines import Constant, WeightedMajority
from .calibration import CalibrationError, estimate_alpha0, grid_report
from .experiment import SCHEMA_VERSION, ConfigError, run_experiment, write_experiment_csv
from .harness import (
    GENERATOR_KINDS,
    GeneratorSpec,
    generate,
    ingest_prices,
    read_prediction_log,
    write_prediction_log,
)
from .payoff import aligned_payoff_dp, payoff_dp
from .predictor import IntervalPredictor, MagnitudeModel, run_game
from .sequence import read_sequence, write_sequence

SEED_ENV = "INTERVAL_REGRET_SEED"
log = logging.getLogger("interval_regret")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=False, default=float)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_payoff(args):
    seq = read_sequence(args.input)
    if args.aligned:
        value, part = aligned_payoff_dp(seq, args.alpha)
    else:
        value, part, _ = payoff_dp(seq, args.alpha)
    print(repr(value))
    for iv in part:
        print(str(iv))
    _emit({"schema_version": SCHEMA_VERSION, "value": value, "k": len(part),
           "alpha": args.alpha, "T": int(seq.shape[0]), "aligned": args.aligned})


def _model(spec: str) -> MagnitudeModel:
    if spec in MagnitudeModel.KINDS[:2]:
        return MagnitudeModel(spec)
    return MagnitudeModel.from_file(spec)


def _summary(result, extra):
    return {"schema_version": SCHEMA_VERSION, "payoff": result.payoff, "T": int(result.observed.shape[0]),
            "clamp_count": result.clamp_count, **extra}


def cmd_predict(args):
    seq = read_sequence(args.input, bounded=args.mode != "real")
    model = _model(args.magnitudes) if args.mode == "real" else None
    pred = IntervalPredictor(seq.shape[0], args.alpha, args.mode, args.seed, model)
    result = run_game(pred, seq)
    if args.log:
        write_prediction_log(args.log, result)
    p, _, _ = payoff_dp(seq, args.alpha)
    _emit(_summary(result, {"mode": args.mode, "alpha": args.alpha, "seed": args.seed,
                            "P_alpha": p, "slack": result.payoff - p}))


def cmd_baseline(args):
    seq = read_sequence(args.input)
    T = seq.shape[0]
    algo = {"wm": lambda: WeightedMajority(T, args.eta),
            "const+": lambda: Constant(1.0, T),
            "const-": lambda: Constant(-1.0, T)}[args.algo]()
    result = run_game(algo, seq)
    if args.log:
        write_prediction_log(args.log, result)
    _emit(_summary(result, {"algo": args.algo, "best_expert": float(abs(seq.sum()))}))


def _grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--alpha-grid expects lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise UsageError("--alpha-grid needs lo <= hi and step > 0")
    return np.round(np.arange(lo, hi + step / 2, step), 12)


def cmd_calibrate(args):
    if args.alpha_grid:
        report = grid_report(args.T, _grid(args.alpha_grid), args.n, args.seed, args.aligned)
    else:
        report = estimate_alpha0(args.T, args.n, args.seed, args.aligned, args.bisect)
    if args.csv:
        report.write_csv(args.csv)
    _emit({"schema_version": SCHEMA_VERSION, **report.to_dict()}, args.json)


def cmd_generate(args):
    params = {k: v for k, v in (("x", args.x), ("p", args.p), ("k", args.k), ("c", args.c),
                                ("value", args.value), ("signs", args.signs),
                                ("model", args.model)) if v is not None}
    seq = generate(GeneratorSpec(args.kind, args.seed, params), args.T)
    if args.output:
        write_sequence(args.output, seq)
    else:
        for v in seq:
            print(repr(float(v)))


def cmd_backtest(args):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        if args.seed_given or "seed" not in config:
            config["seed"] = args.seed
    else:
        if args.alpha is None:
            raise UsageError("--alpha is required with --prices")
        config = {"alpha": args.alpha, "seed": args.seed,
                  "input": {"prices": args.prices, "values": args.values},
                  "algorithms": args.algos.split(",")}
        series = ingest_prices(args.prices)
        if series.clip_count:
            log.warning("%d returns clipped to [-1, 1]", series.clip_count)
    report = run_experiment(config)
    if args.csv:
        write_experiment_csv(args.csv, report)
    _emit(report, args.report)


def cmd_score_log(args):
    lg = read_prediction_log(args.log)
    score = lg.score()
    out = {"schema_version": SCHEMA_VERSION, "payoff": score, "recorded_payoff": lg.recorded_payoff,
           "matches_recorded": score == lg.recorded_payoff, "T": int(lg.observed.shape[0]),
           "clamp_count": int(lg.clamped.sum())}
    if args.alpha is not None:
        p, _, _ = payoff_dp(lg.observed, args.alpha)
        out.update({"alpha": args.alpha, "P_alpha": p, "slack": score - p})
    _emit(out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="interval-regret",
                     description="Bit prediction with amortized per-interval regret guarantees.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("payoff", help="interval payoff and a maximizing partition")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--aligned", action="store_true")
    p.set_defaults(func=cmd_payoff)

    p = sub.add_parser("predict", help="play an interval predictor against a sequence")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--mode", choices=("exact", "mc", "aligned", "real"), default="mc")
    p.add_argument("--seed", type=int)
    p.add_argument("--input", required=True)
    p.add_argument("--log")
    p.add_argument("--magnitudes", default="point-mass-one",
                   help="real mode: point-mass-one, half-normal-mean-one or a file of magnitudes")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("baseline", help="play a baseline predictor")
    p.add_argument("--algo", choices=("wm", "const+", "const-"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--log")
    p.add_argument("--eta", type=float)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("calibrate", help="estimate alpha_0(T)")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--seed", type=int)
    p.add_argument("--aligned", action="store_true")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--alpha-grid")
    g.add_argument("--bisect", type=float, default=1e-3, metavar="TOL")
    p.add_argument("--json", help="write the report here instead of stdout")
    p.add_argument("--csv", help="per-alpha table (alpha, mean, stderr, n)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("generate", help="write a synthetic sequence")
    p.add_argument("--kind", choices=GENERATOR_KINDS, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--x", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--value", type=float)
    p.add_argument("--signs", choices=("constant", "alternating", "uniform"))
    p.add_argument("--model", choices=MagnitudeModel.KINDS[:2])
    p.add_argument("--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("backtest", help="run an experiment from a config or a price CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--prices")
    p.add_argument("--values", choices=("bits", "returns"), default="bits")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--algos", default="interval-mc,wm,const+")
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.add_argument("--csv", help="per-game, per-algorithm CSV table")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("score-log", help="rescore a prediction log")
    p.add_argument("--log", required=True)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_score_log)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.seed_given = getattr(args, "seed", None) is not None
        if getattr(args, "seed", "absent") is None:
            args.seed = _default_seed()
        args.func(args)
    except (UsageError, ConfigError, CalibrationError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
