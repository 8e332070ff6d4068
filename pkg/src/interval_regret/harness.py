"""Sequence generators, price ingestion and prediction-log I/O."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .predictor import MagnitudeModel

MAX_REJECTIONS = 10 ** 6
GENERATOR_KINDS = ("uniform", "constant", "alternating", "biased-blocks",
                   "low-height-blocks", "real-signs-adversarial")
LOG_COLUMNS = ["step", "observed_bit", "prediction", "cumulative_payoff", "clamped"]


@dataclass
class GeneratorSpec:
    """Which synthetic sequence to draw.

    ``params`` by kind: ``constant`` takes ``value`` (default +1);
    ``biased-blocks`` takes block length ``x``, bias ``p`` and optional
    count ``k``; ``low-height-blocks`` takes ``x``, ``c`` and optional
    ``k``; ``real-signs-adversarial`` takes ``signs`` (``constant``,
    ``alternating`` or ``uniform``) and ``model`` (a magnitude model kind).
    """

    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def validate(self) -> list[str]:
        errs = []
        p = self.params
        if self.kind not in GENERATOR_KINDS:
            return [f"unknown generator kind {self.kind!r}"]
        if self.kind in ("biased-blocks", "low-height-blocks"):
            if int(p.get("x", 0)) < 1:
                errs.append(f"{self.kind}: block length x must be a positive integer")
            if "k" in p and int(p["k"]) < 1:
                errs.append(f"{self.kind}: block count k must be positive")
        if self.kind == "biased-blocks" and not 0 <= float(p.get("p", 0.75)) <= 1:
            errs.append("biased-blocks: bias p must lie in [0, 1]")
        if self.kind == "low-height-blocks" and not float(p.get("c", 0)) > 0:
            errs.append("low-height-blocks: c must be positive")
        if self.kind == "constant" and abs(float(p.get("value", 1.0))) > 1:
            errs.append("constant: value must lie in [-1, 1]")
        return errs


def _blocks(spec: GeneratorSpec, T: int) -> tuple[int, int]:
    x = int(spec.params["x"])
    k = int(spec.params.get("k", math.ceil(T / x)))
    if "k" in spec.params and k * x != T:
        raise ValueError(f"{spec.kind}: T={T} must equal k*x = {k}*{x}")
    return x, k


def low_height_block(rng: np.random.Generator, x: int, c: float) -> np.ndarray:
    """Uniform block of length ``x`` conditioned on ``|height| <= 2 c sqrt(x)``."""
    bound = 2.0 * c * math.sqrt(x)
    for _ in range(MAX_REJECTIONS):
        block = rng.integers(0, 2, size=x).astype(np.float64) * 2.0 - 1.0
        if abs(block.sum()) <= bound:
            return block
    raise RuntimeError(f"rejection sampling exceeded {MAX_REJECTIONS} draws (x={x}, c={c})")


def generate(spec: GeneratorSpec, T: int) -> np.ndarray:
    errs = spec.validate()
    if errs:
        raise ValueError("; ".join(errs))
    if T < 0:
        raise ValueError("T must be non-negative")
    rng = np.random.default_rng(spec.seed)
    p = spec.params
    kind = spec.kind
    if kind == "uniform":
        return rng.integers(0, 2, size=T).astype(np.float64) * 2.0 - 1.0
    if kind == "constant":
        return np.full(T, float(p.get("value", 1.0)))
    if kind == "alternating":
        return np.where(np.arange(T) % 2 == 0, 1.0, -1.0)
    if kind == "biased-blocks":
        x, k = _blocks(spec, T)
        bias = float(p.get("p", 0.75))
        out = []
        for _ in range(k):
            direction = 1.0 if rng.random() < 0.5 else -1.0
            agree = rng.random(x) < bias
            out.append(np.where(agree, direction, -direction))
        return np.concatenate(out)[:T] if out else np.zeros(0)
    if kind == "low-height-blocks":
        x, k = _blocks(spec, T)
        c = float(p["c"])
        out = [low_height_block(rng, x, c) for _ in range(k)]
        return np.concatenate(out)[:T] if out else np.zeros(0)
    # real-signs-adversarial
    model = MagnitudeModel(p.get("model", "half-normal-mean-one"))
    signs = p.get("signs", "constant")
    if signs == "constant":
        s = np.ones(T)
    elif signs == "alternating":
        s = np.where(np.arange(T) % 2 == 0, 1.0, -1.0)
    elif signs == "uniform":
        s = rng.integers(0, 2, size=T).astype(np.float64) * 2.0 - 1.0
    else:
        raise ValueError(f"unknown sign pattern {signs!r}")
    return s * model.sample(rng, T)


@dataclass
class PriceSeries:
    timestamps: list[str]
    returns: np.ndarray
    bits: np.ndarray
    clipped: np.ndarray
    clip_count: int


def ingest_prices(path: str | Path) -> PriceSeries:
    """Per-step returns from a ``timestamp,price`` CSV.

    The first row has no return and is dropped.  Bits are the signs of the
    returns with zero returns mapped to 0; the real sequence is the returns
    clipped to [-1, 1].  Consecutive rows are consecutive steps.
    """
    stamps, prices = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        cols = [h.strip().lower() for h in header]
        if "timestamp" not in cols or "price" not in cols:
            raise ValueError(f"{path}: header must contain 'timestamp' and 'price', got {header}")
        it, ip = cols.index("timestamp"), cols.index("price")
        for rowno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                price = float(row[ip])
            except (ValueError, IndexError):
                raise ValueError(f"{path}: row {rowno}: cannot parse price from {row}") from None
            if not math.isfinite(price) or price <= 0:
                raise ValueError(f"{path}: row {rowno}: price must be positive, got {price}")
            stamps.append(row[it])
            prices.append(price)
    if len(prices) < 2:
        raise ValueError(f"{path}: need at least 2 price rows, got {len(prices)}")
    px = np.asarray(prices)
    returns = px[1:] / px[:-1] - 1.0
    clipped = np.clip(returns, -1.0, 1.0)
    return PriceSeries(stamps[1:], returns, np.sign(returns), clipped,
                       int(np.count_nonzero(clipped != returns)))


def write_prediction_log(path: str | Path, result) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for t in range(result.predictions.shape[0]):
            w.writerow([t + 1, repr(float(result.observed[t])), repr(float(result.predictions[t])),
                        repr(float(result.cumulative[t])), int(result.clamped[t])])


@dataclass
class PredictionLog:
    observed: np.ndarray
    predictions: np.ndarray
    cumulative: np.ndarray
    clamped: np.ndarray

    def score(self) -> float:
        """Payoff recomputed left to right from the logged bets."""
        total = 0.0
        for b, p in zip(self.observed, self.predictions):
            total += float(b) * float(p)
        return total

    @property
    def recorded_payoff(self) -> float:
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0


def read_prediction_log(path: str | Path) -> PredictionLog:
    cols = {c: [] for c in LOG_COLUMNS}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(LOG_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rowno, row in enumerate(reader, 2):
            try:
                for c in LOG_COLUMNS:
                    cols[c].append(float(row[c]))
            except ValueError:
                raise ValueError(f"{path}: row {rowno}: unparsable value in {row}") from None
    steps = np.asarray(cols["step"])
    if steps.size and not np.array_equal(steps, np.arange(1, steps.size + 1)):
        raise ValueError(f"{path}: steps must be 1, 2, ..., T in order")
    preds = np.asarray(cols["prediction"])
    if np.any(np.abs(preds) > 1):
        raise ValueError(f"{path}: predictions must lie in [-1, 1]")
    return PredictionLog(np.asarray(cols["observed_bit"]), preds,
                         np.asarray(cols["cumulative_payoff"]),
                         np.asarray(cols["clamped"]).astype(bool))
