"""Randomized predictors that guarantee the interval payoff in expectation.

All predictors follow the same recipe: to predict position ``t+1`` after
seeing ``s``, compare the payoff function on ``s.(+1).U`` and ``s.(-1).U``
for a random completion ``U`` and bet half the difference.

* exact:   averages over every completion (tiny ``T`` only);
* mc:      one pre-drawn completion ``U_t`` per step, payoffs stitched from
           prefix data of ``s`` and suffix data of ``U_t`` in O(T^2);
* aligned: same completions, only dyadic intervals, O(log T) per step;
* real:    signs random, magnitudes from a mean-one distribution.

Completion stream layout (shared by ``mc``, ``aligned`` and ``real``):
``numpy.random.default_rng(seed)`` draws ``T*(T-1)/2`` integers in {0, 1}
in one call; they are mapped to -1/+1 and cut in order into ``U_0`` (length
``T-1``), ``U_1`` (length ``T-2``), ..., ``U_{T-1}`` (empty).  Real mode
multiplies these signs by ``T*(T-1)/2`` magnitudes drawn in one call from
``numpy.random.default_rng([seed, 1])`` (same cut), and draws the ``T``
magnitudes used at the inserted positions from
``numpy.random.default_rng([seed, 2])``.

In real mode with ``bet="size-biased"`` (the default) the inserted
magnitude ``r`` comes from the size-biased law (density proportional to
``r`` times the model density) and the bet is
``(f(..+r..) - f(..-r..)) / (2 r)``.  Its expectation equals the bet with
a plain draw, ``E[(f(..+r..) - f(..-r..)) / 2]``, but it never leaves
[-1, 1], so no clamping bias is introduced.  ``bet="plain"`` uses the
plain draw and clamps.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .payoff import (
    _check_alpha,
    aligned_payoff_value,
    payoff_value,
    prefix_payoffs,
    suffix_payoffs,
)
from .sequence import _require_power_of_two, build_prefix_sums

log = logging.getLogger(__name__)

EXACT_MAX_T = 16
MODES = ("exact", "mc", "aligned", "real")


CLAMP_NOISE = 1e-9


def _clamp(raw: float) -> tuple[float, bool]:
    """Trim to [-1, 1]; overshoot within rounding noise is not a clamp event."""
    if abs(raw) <= 1.0:
        return raw, False
    return (1.0 if raw > 0 else -1.0), abs(raw) > 1.0 + CLAMP_NOISE


# ---------------------------------------------------------------- exact


def exact_predict_step(s, alpha: float, T: int) -> float:
    """Cover's bet with exact expectations over all ``2**(T-t-1)`` completions."""
    alpha = _check_alpha(alpha)
    s = np.asarray(s, dtype=np.float64)
    t = s.shape[0]
    if T > EXACT_MAX_T:
        raise ValueError(f"exact predictor refuses T={T} > {EXACT_MAX_T}")
    if not 0 <= t < T:
        raise ValueError(f"prefix length {t} out of range for horizon {T}")
    L = T - t - 1
    tails = np.array(list(itertools.product((-1.0, 1.0), repeat=L))).reshape(2 ** L, L)
    head = np.broadcast_to(s, (2 ** L, t))
    up = np.hstack([head, np.ones((2 ** L, 1)), tails])
    down = np.hstack([head, -np.ones((2 ** L, 1)), tails])
    diff = payoff_value(up, alpha).mean() - payoff_value(down, alpha).mean()
    raw = diff / 2.0
    # the difference is at most 2 in theory; only trim rounding noise
    if abs(raw) > 1.0 + CLAMP_NOISE:
        raise ArithmeticError(f"exact bet {raw} outside [-1, 1]")
    return float(min(1.0, max(-1.0, raw)))


class ExactPredictor:
    """Callable wrapper around :func:`exact_predict_step` for :func:`run_game`."""

    def __init__(self, T: int, alpha: float):
        if T > EXACT_MAX_T:
            raise ValueError(f"exact predictor refuses T={T} > {EXACT_MAX_T}")
        self.T = T
        self.alpha = _check_alpha(alpha)
        self.clamp_count = 0

    def __call__(self, prefix) -> float:
        return exact_predict_step(prefix, self.alpha, self.T)


# ---------------------------------------------------------------- completions


def sample_completions(T: int, seed: int) -> list[np.ndarray]:
    """Draw ``U_0 .. U_{T-1}`` following the documented stream layout."""
    rng = np.random.default_rng(seed)
    flat = rng.integers(0, 2, size=T * (T - 1) // 2).astype(np.float64) * 2.0 - 1.0
    out, pos = [], 0
    for t in range(T):
        L = T - t - 1
        out.append(flat[pos:pos + L])
        pos += L
    return out


def sample_completion_batch(T: int, batch: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``batch`` independent completion sets at once; entry ``t`` has shape (batch, T-t-1)."""
    return [rng.integers(0, 2, size=(batch, T - t - 1)).astype(np.float64) * 2.0 - 1.0
            for t in range(T)]


@dataclass
class MagnitudeModel:
    """Distribution of magnitudes with mean one (non-negative support)."""

    kind: str = "point-mass-one"
    values: np.ndarray | None = None

    KINDS = ("point-mass-one", "half-normal-mean-one", "empirical")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown magnitude model {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "empirical":
            vals = np.abs(np.asarray(self.values, dtype=np.float64))
            if vals.size == 0 or vals.mean() == 0:
                raise ValueError("empirical magnitude model needs non-zero values")
            self.values = vals / vals.mean()

    @classmethod
    def from_file(cls, path) -> "MagnitudeModel":
        from .sequence import read_sequence

        return cls("empirical", read_sequence(path, bounded=False))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "point-mass-one":
            return np.ones(size)
        if self.kind == "half-normal-mean-one":
            # E|N(0, s^2)| = s * sqrt(2/pi) = 1
            out = np.abs(rng.normal(0.0, np.sqrt(np.pi / 2.0), size=size))
        else:
            out = rng.choice(self.values, size=size)
        if np.any(out < 0):
            raise ValueError("magnitude model produced a negative magnitude")
        return out

    def sample_size_biased(self, rng: np.random.Generator, size) -> np.ndarray:
        """Draws with density ``r * p(r)``; all three kinds have mean one, so no normalizer."""
        if self.kind == "point-mass-one":
            return np.ones(size)
        if self.kind == "half-normal-mean-one":
            return rng.rayleigh(np.sqrt(np.pi / 2.0), size=size)
        return rng.choice(self.values, size=size, p=self.values / self.values.sum())

    def check_mean(self, rng: np.random.Generator, n: int = 100_000) -> bool:
        """Sampled mean within 3 standard errors of one."""
        m = self.sample(rng, n)
        se = m.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
        return bool(abs(m.mean() - 1.0) <= 3 * se + 1e-12)


# ---------------------------------------------------------------- state


@dataclass
class PredictorState:
    """Pre-drawn completions with their precomputed data plus running prefix data.

    ``u_suffix[t][m]`` is, in ``mc``/``real`` mode, the payoff of
    ``U_t[m:]``; in ``aligned`` mode it is the best aligned payoff of
    global positions ``t+2+m .. T``.  ``prefix_best[i]`` is the payoff (or
    best aligned payoff) of the first ``i`` observed values.
    """

    T: int
    alpha: float
    mode: str
    seed: int | None
    completions: list[np.ndarray] = field(repr=False)
    u_heights: list[np.ndarray] = field(repr=False)
    u_suffix: list[np.ndarray] = field(repr=False)
    insert_magnitudes: np.ndarray | None = field(default=None, repr=False)
    model: MagnitudeModel | None = None
    observed: list[float] = field(default_factory=list, repr=False)
    heights: list[float] = field(default_factory=lambda: [0.0], repr=False)
    prefix_best: list[float] = field(default_factory=lambda: [0.0], repr=False)
    clamp_count: int = 0
    last_candidates: int = 0
    bet: str = "plain"

    def reset(self) -> None:
        self.observed.clear()
        self.heights[:] = [0.0]
        self.prefix_best[:] = [0.0]
        self.last_candidates = 0

    def _append(self, v: float) -> None:
        self.observed.append(v)
        c = self.heights
        c.append(c[-1] + v)
        p = len(self.observed)
        if self.mode == "aligned":
            best, size = -np.inf, 1
            while p % size == 0 and size <= p:
                val = self.prefix_best[p - size] + abs(c[p] - c[p - size]) - self.alpha * np.sqrt(size)
                best = max(best, val)
                size <<= 1
        else:
            cs = np.asarray(c)
            pb = np.asarray(self.prefix_best)
            lengths = np.sqrt(np.arange(p, 0, -1, dtype=np.float64))
            best = float(np.max(pb + np.abs(cs[p] - cs[:p]) - self.alpha * lengths))
        self.prefix_best.append(float(best))

    def sync(self, s) -> None:
        """Bring the running prefix data in line with the observed prefix ``s``."""
        s = [float(v) for v in s]
        n = len(self.observed)
        if len(s) < n or s[:n] != self.observed:
            self.reset()
            n = 0
        for v in s[n:]:
            self._append(v)


def _aligned_suffix_table(u: np.ndarray, t: int, T: int, alpha: float) -> np.ndarray:
    """Best aligned payoff of global positions ``q+1..T`` for ``q = t+1..T``.

    ``u`` holds global positions ``t+2..T``; the result is indexed by ``q - (t+1)``.
    """
    uh = build_prefix_sums(u)
    L = T - t - 1
    out = np.zeros(L + 1)
    for q in range(T - 1, t, -1):
        best, size = -np.inf, 1
        while q % size == 0 and q + size <= T:
            val = abs(uh[q + size - t - 1] - uh[q - t - 1]) - alpha * np.sqrt(size) + out[q + size - t - 1]
            best = max(best, val)
            size <<= 1
        out[q - t - 1] = best
    return out


def mc_precompute(T: int, alpha: float, seed: int | None = 0, completions=None,
                  mode: str = "mc") -> PredictorState:
    """Draw (or accept) ``U_0..U_{T-1}`` and precompute their prefix heights and suffix payoffs."""
    alpha = _check_alpha(alpha)
    if T < 1:
        raise ValueError("horizon must be at least 1")
    if mode not in ("mc", "aligned"):
        raise ValueError(f"mode must be 'mc' or 'aligned', got {mode!r}")
    if mode == "aligned":
        _require_power_of_two(T)
    if completions is None:
        completions = sample_completions(T, seed)
    else:
        completions = [np.asarray(u, dtype=np.float64) for u in completions]
        if len(completions) != T or any(u.shape != (T - t - 1,) for t, u in enumerate(completions)):
            raise ValueError("completions must have lengths T-1, T-2, ..., 0")
    heights = [build_prefix_sums(u) for u in completions]
    if mode == "mc":
        suffix = [suffix_payoffs(u, alpha) for u in completions]
    else:
        suffix = [_aligned_suffix_table(u, t, T, alpha) for t, u in enumerate(completions)]
    return PredictorState(T, alpha, mode, seed, completions, heights, suffix)


def aligned_precompute(T: int, alpha: float, seed: int = 0, completions=None) -> PredictorState:
    return mc_precompute(T, alpha, seed, completions, mode="aligned")


def real_precompute(T: int, alpha: float, seed: int = 0,
                    model: MagnitudeModel | None = None, bet: str = "size-biased") -> PredictorState:
    """Completions with random signs (bit-mode layout) and magnitudes drawn from ``model``."""
    if bet not in ("size-biased", "plain"):
        raise ValueError(f"bet must be 'size-biased' or 'plain', got {bet!r}")
    model = model or MagnitudeModel()
    signs = sample_completions(T, seed)
    flat = model.sample(np.random.default_rng([seed, 1]), T * (T - 1) // 2)
    ins_rng = np.random.default_rng([seed, 2])
    inserted = model.sample_size_biased(ins_rng, T) if bet == "size-biased" else model.sample(ins_rng, T)
    completions, pos = [], 0
    for t in range(T):
        completions.append(signs[t] * flat[pos:pos + T - t - 1])
        pos += T - t - 1
    state = mc_precompute(T, alpha, seed, completions)
    state.mode, state.seed = "real", seed
    state.insert_magnitudes = inserted
    state.model = model
    state.bet = bet
    return state


# ---------------------------------------------------------------- stitching


def stitched_payoff(pref, hs, inserted, uh, usuf, alpha: float):
    """Payoff of ``s . inserted . U`` from prefix data of ``s`` and suffix data of ``U``.

    ``pref[i]`` = payoff of ``s[:i]``, ``hs[i]`` = height of ``s[i:]`` (``i = 0..t``);
    ``uh[m]`` = height of ``U[:m]``, ``usuf[m]`` = payoff of ``U[m:]`` (``m = 0..L``).
    The interval crossing the inserted position covers ``s[i:]``, the
    inserted value and ``U[:m]``.  ``uh``/``usuf`` (and ``inserted``) may
    carry leading batch axes.
    """
    t = pref.shape[0] - 1
    L = uh.shape[-1] - 1
    i = np.arange(t + 1)[:, None]
    m = np.arange(L + 1)[None, :]
    penalty = alpha * np.sqrt(t + 1 + m - i)
    ins = np.asarray(inserted, dtype=np.float64)[..., None, None]
    val = (pref[:, None] - penalty + usuf[..., None, :]
           + np.abs(hs[:, None] + ins + uh[..., None, :]))
    return val.max(axis=(-2, -1))


def _check_step(state: PredictorState, s, t: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if t != s.shape[0] or not 0 <= t < state.T:
        raise IndexError(f"step t={t} out of range (prefix length {s.shape[0]}, horizon {state.T})")
    return s


def _stitched_pair(state: PredictorState, t: int, up: float, down: float) -> tuple[float, float]:
    pref = np.asarray(state.prefix_best)
    c = np.asarray(state.heights)
    hs = c[t] - c
    uh, usuf = state.u_heights[t], state.u_suffix[t]
    return (float(stitched_payoff(pref, hs, up, uh, usuf, state.alpha)),
            float(stitched_payoff(pref, hs, down, uh, usuf, state.alpha)))


def _bet(state: PredictorState, hi: float, lo: float) -> float:
    pred, clamped = _clamp((hi - lo) / 2.0)
    if clamped:
        state.clamp_count += 1
        log.debug("clamped bet %.12g at step %d", (hi - lo) / 2.0, len(state.observed))
    return pred


def mc_predict_step(state: PredictorState, s, t: int) -> float:
    """Bet for position ``t+1`` using the pre-drawn completion ``U_t`` (O(T^2))."""
    if state.mode != "mc":
        raise ValueError(f"state was precomputed for mode {state.mode!r}")
    s = _check_step(state, s, t)
    state.sync(s)
    hi, lo = _stitched_pair(state, t, 1.0, -1.0)
    state.last_candidates = (t + 1) * (state.T - t)
    return _bet(state, hi, lo)


def aligned_candidates(state: PredictorState, t: int, inserted: float) -> list[float]:
    """Candidate payoffs, one per aligned interval containing position ``t+1``."""
    T, alpha = state.T, state.alpha
    c, best = state.heights, state.prefix_best
    uh, suf = state.u_heights[t], state.u_suffix[t]
    out = []
    size = 1
    while size <= T:
        a = (t // size) * size + 1
        e = a + size - 1
        crossing = (c[t] - c[a - 1]) + inserted + uh[e - t - 1]
        out.append(best[a - 1] + abs(crossing) - alpha * np.sqrt(size) + suf[e - t - 1])
        size <<= 1
    return out


def aligned_fast_predict_step(state: PredictorState, s, t: int) -> float:
    """Bet for position ``t+1`` over aligned partitions only (O(log T) per step)."""
    if state.mode != "aligned":
        raise ValueError(f"state was precomputed for mode {state.mode!r}")
    s = _check_step(state, s, t)
    state.sync(s)
    up = aligned_candidates(state, t, 1.0)
    down = aligned_candidates(state, t, -1.0)
    state.last_candidates = len(up)
    return _bet(state, max(up), max(down))


def aligned_reference_step(state: PredictorState, s, t: int) -> float:
    """Slow reference: materialize ``s.(+-1).U_t`` and run the aligned DP on each."""
    s = np.asarray(s, dtype=np.float64)
    u = state.completions[t]
    hi = aligned_payoff_value(np.concatenate([s, [1.0], u]), state.alpha)
    lo = aligned_payoff_value(np.concatenate([s, [-1.0], u]), state.alpha)
    return float(np.clip((hi - lo) / 2.0, -1.0, 1.0))


def real_valued_predict_step(state: PredictorState, m, t: int,
                             model: MagnitudeModel | None = None) -> float:
    """Bet for the sign of value ``t+1`` when magnitudes are i.i.d. with mean one."""
    if state.mode != "real":
        raise ValueError(f"state was precomputed for mode {state.mode!r}")
    if model is not None and state.model is not None and model.kind != state.model.kind:
        raise ValueError(f"state drew magnitudes from {state.model.kind!r}, not {model.kind!r}")
    m = _check_step(state, m, t)
    state.sync(m)
    mag = state.insert_magnitudes[t]
    hi, lo = _stitched_pair(state, t, mag, -mag)
    state.last_candidates = (t + 1) * (state.T - t)
    if state.bet == "size-biased":
        if mag == 0:
            return 0.0
        return _bet(state, hi / mag, lo / mag)
    return _bet(state, hi, lo)


class IntervalPredictor:
    """Stateful callable predictor for :func:`run_game`.

    ``mode`` is one of ``exact``, ``mc``, ``aligned`` or ``real``.
    """

    def __init__(self, T: int, alpha: float, mode: str = "mc", seed: int = 0,
                 model: MagnitudeModel | None = None, completions=None, bet: str = "size-biased"):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        self.T, self.alpha, self.mode, self.seed = T, alpha, mode, seed
        if mode == "exact":
            self.state = None
            self._exact = ExactPredictor(T, alpha)
        elif mode == "real":
            self.state = real_precompute(T, alpha, seed, model, bet)
        else:
            self.state = mc_precompute(T, alpha, seed, completions, mode=mode)

    @property
    def clamp_count(self) -> int:
        return 0 if self.state is None else self.state.clamp_count

    def __call__(self, prefix) -> float:
        t = len(prefix)
        if self.mode == "exact":
            return self._exact(prefix)
        if self.mode == "mc":
            return mc_predict_step(self.state, prefix, t)
        if self.mode == "aligned":
            return aligned_fast_predict_step(self.state, prefix, t)
        return real_valued_predict_step(self.state, prefix, t)


# ---------------------------------------------------------------- games


@dataclass
class GameResult:
    payoff: float
    predictions: np.ndarray
    cumulative: np.ndarray
    clamped: np.ndarray
    observed: np.ndarray

    @property
    def clamp_count(self) -> int:
        return int(self.clamped.sum())


def run_game(step: Callable, seq) -> GameResult:
    """Play ``step`` against ``seq``: record each bet before revealing the value.

    ``step(prefix)`` receives a fresh copy of the values seen so far.
    """
    seq = np.asarray(seq, dtype=np.float64)
    T = seq.shape[0]
    horizon = getattr(step, "T", None)
    if horizon is not None and horizon != T:
        raise ValueError(f"predictor horizon {horizon} does not match sequence length {T}")
    preds = np.empty(T)
    cum = np.empty(T)
    clamped = np.zeros(T, dtype=bool)
    total = 0.0
    for t in range(T):
        before = getattr(step, "clamp_count", 0)
        pred = float(step(seq[:t].copy()))
        if not -1.0 <= pred <= 1.0:
            raise ValueError(f"prediction {pred} at step {t + 1} is outside [-1, 1]")
        preds[t] = pred
        clamped[t] = getattr(step, "clamp_count", 0) > before
        total += float(seq[t]) * pred
        cum[t] = total
    return GameResult(total, preds, cum, clamped, seq)


def mc_game_payoffs(seq, alpha: float, completions: list[np.ndarray]) -> np.ndarray:
    """Realized payoff of the ``mc`` predictor on ``seq`` for a batch of completion sets.

    ``completions[t]`` has shape ``(batch, T-t-1)`` (see
    :func:`sample_completion_batch`).  Uses the same stitching as
    :func:`mc_predict_step`, vectorized over the batch.
    """
    alpha = _check_alpha(alpha)
    seq = np.asarray(seq, dtype=np.float64)
    T = seq.shape[0]
    pref_all = prefix_payoffs(seq, alpha)
    c = build_prefix_sums(seq)
    total = np.zeros(completions[0].shape[0])
    for t in range(T):
        u = completions[t]
        uh = build_prefix_sums(u)
        usuf = suffix_payoffs(u, alpha)
        pref = pref_all[:t + 1]
        hs = c[t] - c[:t + 1]
        hi = stitched_payoff(pref, hs, 1.0, uh, usuf, alpha)
        lo = stitched_payoff(pref, hs, -1.0, uh, usuf, alpha)
        total += seq[t] * np.clip((hi - lo) / 2.0, -1.0, 1.0)
    return total

