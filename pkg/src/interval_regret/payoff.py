"""The interval payoff function and the dynamic programs that compute it.

For a sequence ``X`` and penalty ``alpha`` the interval payoff is the best
value of ``sum(|h(X_i)| - alpha * sqrt(|X_i|))`` over all partitions of
``X`` into contiguous intervals.  Three routes are provided:

* :func:`payoff_dp` fills the full triangular table over sub-intervals
  (cubic time) and recovers a maximizing partition;
* :func:`payoff_value` / :func:`prefix_payoffs` run the quadratic
  last-interval recursion, batched over many sequences, for calibration
  and prediction;
* :func:`payoff_bruteforce_oracle` enumerates every split pattern and is
  used only as an independent check.

The aligned variant restricts partitions to dyadic intervals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .sequence import (
    Interval,
    Partition,
    _require_power_of_two,
    build_prefix_sums,
    check_partition,
    sqrt_table,
)

TIE_TOL = 1e-12
BRUTEFORCE_MAX_T = 20


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValueError(f"alpha must be positive and finite, got {alpha}")
    return alpha


def _check_alpha_nonneg(alpha: float) -> float:
    # alpha = 0 is outside the Alpha domain but is a useful degenerate case
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be non-negative and finite, got {alpha}")
    return alpha


@dataclass(frozen=True)
class PayoffTable:
    """Triangular table of interval payoffs over all sub-intervals.

    ``dp[i, j]`` (0-based, ``i <= j``) holds the payoff of positions
    ``i+1..j+1``; ``choice[i, j]`` is ``-1`` when the single interval is
    chosen, otherwise the 0-based index ``k`` of the last position of the
    left part.  Entries below the diagonal are NaN / unused.
    """

    alpha: float
    dp: np.ndarray = field(repr=False)
    choice: np.ndarray = field(repr=False)
    pieces: np.ndarray = field(repr=False)
    split_comparisons: int = 0

    @property
    def T(self) -> int:
        return self.dp.shape[0]

    def value(self, start: int, end: int) -> float:
        """Payoff of the 1-based sub-interval ``[start, end]``."""
        return float(self.dp[start - 1, end - 1])

    def partition(self, start: int = 1, end: int | None = None) -> Partition:
        """Backtrack a maximizing partition of ``[start, end]``."""
        if end is None:
            end = self.T
        out: list[Interval] = []
        stack = [(start - 1, end - 1)]
        while stack:
            i, j = stack.pop()
            k = int(self.choice[i, j])
            if k < 0:
                out.append(Interval(i + 1, j + 1))
            else:
                stack.append((k + 1, j))
                stack.append((i, k))
        return tuple(out)


def payoff_dp(seq, alpha: float) -> tuple[float, Partition, PayoffTable]:
    """Interval payoff of ``seq`` via the sub-interval table.

    Returns the value, a maximizing partition and the table.  Ties are
    broken toward the single interval, then toward splits whose two sides
    use the fewest intervals in total, then toward the smallest split
    point.
    """
    alpha = _check_alpha_nonneg(alpha)
    x = np.asarray(seq, dtype=np.float64)
    T = x.shape[0]
    if T == 0:
        empty = PayoffTable(alpha, np.zeros((0, 0)), np.zeros((0, 0), dtype=np.int64),
                            np.zeros((0, 0), dtype=np.int64))
        return 0.0, (), empty

    c = build_prefix_sums(x)
    sq = sqrt_table(T)
    dp = np.full((T, T), np.nan)
    choice = np.full((T, T), -1, dtype=np.int64)
    pieces = np.zeros((T, T), dtype=np.int64)
    idx = np.arange(T)
    dp[idx, idx] = np.abs(x) - alpha
    pieces[idx, idx] = 1
    comparisons = 0

    for L in range(2, T + 1):
        i = np.arange(T - L + 1)
        j = i + L - 1
        whole = np.abs(c[j + 1] - c[i]) - alpha * sq[L]
        k = i[:, None] + np.arange(L - 1)[None, :]
        left = dp[i[:, None], k]
        right = dp[k + 1, j[:, None]]
        split = left + right
        comparisons += split.size
        best_split = split.max(axis=1)
        counts = pieces[i[:, None], k] + pieces[k + 1, j[:, None]]
        near = split >= best_split[:, None] - TIE_TOL
        pick = np.where(near, counts, np.iinfo(np.int64).max).argmin(axis=1)
        take_whole = whole >= best_split - TIE_TOL
        dp[i, j] = np.maximum(whole, best_split)
        choice[i, j] = np.where(take_whole, -1, i + pick)
        pieces[i, j] = np.where(take_whole, 1, counts[np.arange(i.size), pick])

    table = PayoffTable(alpha, dp, choice, pieces, comparisons)
    return float(dp[0, T - 1]), table.partition(), table


def payoff_of_partition(seq, part: Partition, alpha: float) -> float:
    """Value of one specific partition (no maximization)."""
    alpha = _check_alpha_nonneg(alpha)
    x = np.asarray(seq, dtype=np.float64)
    check_partition(part, x.shape[0])
    c = build_prefix_sums(x)
    return float(sum(abs(c[iv.end] - c[iv.start - 1]) - alpha * np.sqrt(len(iv)) for iv in part))


def _compositions(T: int):
    """Yield every partition of [1, T] as a list of (start, end) pairs, 1-based."""
    for cuts in itertools.product((False, True), repeat=T - 1):
        parts = []
        start = 1
        for pos, cut in enumerate(cuts, 1):
            if cut:
                parts.append((start, pos))
                start = pos + 1
        parts.append((start, T))
        yield parts


def payoff_bruteforce_oracle(seq, alpha: float) -> float | np.ndarray:
    """Exact interval payoff by enumerating all ``2**(T-1)`` partitions.

    Accepts one sequence or a 2-D batch of equal-length sequences.
    """
    alpha = _check_alpha_nonneg(alpha)
    x = np.asarray(seq, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    T = x.shape[1]
    if T > BRUTEFORCE_MAX_T:
        raise ValueError(f"brute force refuses T={T} > {BRUTEFORCE_MAX_T}")
    if T == 0:
        best = np.zeros(x.shape[0])
        return 0.0 if single else best
    best = np.full(x.shape[0], -np.inf)
    for parts in _compositions(T):
        total = np.zeros(x.shape[0])
        for a, b in parts:
            total += np.abs(x[:, a - 1:b].sum(axis=1)) - alpha * np.sqrt(b - a + 1)
        np.maximum(best, total, out=best)
    return float(best[0]) if single else best


def prefix_payoffs(x, alpha: float) -> np.ndarray:
    """Payoff of every prefix: ``out[..., i]`` is the payoff of the first ``i`` values.

    Uses the last-interval recursion
    ``best[j] = max_{i<j} best[i] + |c[j] - c[i]| - alpha * sqrt(j - i)``
    which is quadratic in the length.  Works on any leading batch shape.
    """
    alpha = _check_alpha_nonneg(alpha)
    x = np.asarray(x, dtype=np.float64)
    T = x.shape[-1]
    c = build_prefix_sums(x)
    sq = sqrt_table(T)
    best = np.zeros(x.shape[:-1] + (T + 1,))
    for j in range(1, T + 1):
        cand = best[..., :j] + np.abs(c[..., j, None] - c[..., :j]) - alpha * sq[j:0:-1]
        best[..., j] = cand.max(axis=-1)
    return best


def suffix_payoffs(x, alpha: float) -> np.ndarray:
    """``out[..., m]`` is the payoff of ``x[..., m:]`` (so ``out[..., T] == 0``)."""
    x = np.asarray(x, dtype=np.float64)
    return prefix_payoffs(x[..., ::-1], alpha)[..., ::-1].copy()


def payoff_value(x, alpha: float, chunk: int = 512) -> float | np.ndarray:
    """Interval payoff of one sequence or each row of a batch (quadratic DP)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return float(prefix_payoffs(x, alpha)[-1])
    out = np.empty(x.shape[0])
    for lo in range(0, x.shape[0], chunk):
        out[lo:lo + chunk] = prefix_payoffs(x[lo:lo + chunk], alpha)[:, -1]
    return out


def aligned_payoff_value(x, alpha: float) -> float | np.ndarray:
    """Aligned interval payoff, bottom-up over the dyadic tree (batched)."""
    alpha = _check_alpha_nonneg(alpha)
    x = np.asarray(x, dtype=np.float64)
    T = x.shape[-1]
    _require_power_of_two(T)
    h = x.copy()
    best = np.abs(h) - alpha
    size = 1
    while size < T:
        size *= 2
        h = h[..., 0::2] + h[..., 1::2]
        best = np.maximum(best[..., 0::2] + best[..., 1::2], np.abs(h) - alpha * np.sqrt(size))
    best = best[..., 0]
    return float(best) if best.ndim == 0 else best


def aligned_payoff_dp(seq, alpha: float) -> tuple[float, Partition]:
    """Aligned interval payoff with a maximizing aligned partition."""
    alpha = _check_alpha_nonneg(alpha)
    x = np.asarray(seq, dtype=np.float64)
    T = x.shape[0]
    _require_power_of_two(T)
    levels_best = [np.abs(x) - alpha]
    levels_whole = [np.ones(T, dtype=bool)]
    h = x.copy()
    size = 1
    while size < T:
        size *= 2
        prev = levels_best[-1]
        h = h[0::2] + h[1::2]
        whole = np.abs(h) - alpha * np.sqrt(size)
        split = prev[0::2] + prev[1::2]
        levels_whole.append(whole >= split - TIE_TOL)
        levels_best.append(np.maximum(whole, split))

    part: list[Interval] = []
    top = len(levels_best) - 1
    stack = [(top, 0)]
    while stack:
        level, node = stack.pop()
        if levels_whole[level][node]:
            size = 1 << level
            part.append(Interval(node * size + 1, (node + 1) * size))
        else:
            stack.append((level - 1, 2 * node + 1))
            stack.append((level - 1, 2 * node))
    return float(levels_best[top][0]), tuple(part)
