"""Sequences, intervals, heights and dyadic (aligned) intervals.

Intervals use 1-based inclusive endpoints everywhere they leave this
package (CLI output, CSV, JSON). Internally values live in float64 numpy
arrays and prefix sums are indexed so that ``c[i]`` is the sum of the
first ``i`` values.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, NamedTuple, Sequence as _Seq

import numpy as np


class Interval(NamedTuple):
    """Closed interval ``[start, end]`` of 1-based positions."""

    start: int
    end: int

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __str__(self) -> str:
        return f"{self.start}:{self.end}"


Partition = tuple  # tuple[Interval, ...]


class RangeError(IndexError):
    """Interval does not fit inside the sequence."""


def as_sequence(values: Iterable[float], bounded: bool = True) -> np.ndarray:
    """Coerce ``values`` to a float64 array, rejecting anything outside [-1, 1]."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                     dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"sequence must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sequence contains non-finite values")
    if bounded and arr.size and (arr.min() < -1.0 or arr.max() > 1.0):
        bad = int(np.flatnonzero((arr < -1.0) | (arr > 1.0))[0])
        raise ValueError(f"value {float(arr[bad])!r} at position {bad + 1} is outside [-1, 1]")
    return arr


def read_sequence(path: str | Path, bounded: bool = True) -> np.ndarray:
    """Read the one-value-per-line text format (blank lines and ``#`` comments skipped)."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cannot parse {text!r} as a number") from None
    return as_sequence(values, bounded=bounded)


def format_value(v: float) -> str:
    if v == int(v) and abs(v) <= 1:
        return f"{int(v):+d}" if v else "0"
    return repr(float(v))


def write_sequence(path: str | Path, seq: _Seq[float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in seq:
            fh.write(format_value(float(v)) + "\n")


def build_prefix_sums(seq) -> np.ndarray:
    """Cumulative sums ``c[0..T]`` with ``c[0] = 0``, accumulated left to right."""
    seq = np.asarray(seq, dtype=np.float64)
    out = np.zeros(seq.shape[:-1] + (seq.shape[-1] + 1,), dtype=np.float64)
    np.cumsum(seq, axis=-1, out=out[..., 1:])
    return out


def _check_interval(iv: Interval, T: int) -> None:
    if not (1 <= iv.start <= iv.end <= T):
        raise RangeError(f"interval [{iv.start}, {iv.end}] is not inside [1, {T}]")


def height(ps: np.ndarray, iv: Interval) -> float:
    """Sum of the values in ``iv``, read off the prefix sums."""
    _check_interval(iv, len(ps) - 1)
    return float(ps[iv.end] - ps[iv.start - 1])


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _require_power_of_two(T: int) -> None:
    if not is_power_of_two(T):
        raise ValueError(f"horizon T={T} is not a power of two")


def is_aligned(iv: Interval, T: int) -> bool:
    """True iff ``iv`` is one of the pieces obtained by cutting [1, T] into 2^i equal parts."""
    _require_power_of_two(T)
    _check_interval(iv, T)
    n = len(iv)
    return is_power_of_two(n) and (iv.start - 1) % n == 0


def _largest_aligned_inside(start: int, end: int) -> Interval:
    n = end - start + 1
    size = 1 << (n.bit_length() - 1)
    while size > 1:
        first = -(-(start - 1) // size) * size + 1
        if first + size - 1 <= end:
            return Interval(first, first + size - 1)
        size >>= 1
    return Interval(start, start)


def aligned_decompose(iv: Interval, T: int) -> Partition:
    """Minimal ordered partition of ``iv`` into aligned intervals.

    Repeatedly removes the largest aligned interval contained in what is
    left, then recurses on the pieces to either side of it.
    """
    _require_power_of_two(T)
    _check_interval(iv, T)
    pieces: list[Interval] = []
    stack = [(int(iv.start), int(iv.end))]
    while stack:
        lo, hi = stack.pop()
        if lo > hi:
            continue
        big = _largest_aligned_inside(lo, hi)
        pieces.append(big)
        stack.append((lo, big.start - 1))
        stack.append((big.end + 1, hi))
    pieces.sort()
    return tuple(pieces)


def aligned_intervals_containing(pos: int, T: int) -> list[Interval]:
    """The log2(T) + 1 aligned intervals that contain 1-based position ``pos``, smallest first."""
    _require_power_of_two(T)
    out = []
    size = 1
    while size <= T:
        start = ((pos - 1) // size) * size + 1
        out.append(Interval(start, start + size - 1))
        size <<= 1
    return out


def check_partition(part: _Seq[Interval], T: int) -> None:
    """Raise ``ValueError`` unless ``part`` tiles [1, T] in order."""
    if T == 0 and not part:
        return
    if not part:
        raise ValueError("empty partition of a non-empty range")
    expected = 1
    for iv in part:
        if iv.start != expected or iv.end < iv.start:
            raise ValueError(f"partition is not contiguous at {iv}; expected start {expected}")
        expected = iv.end + 1
    if expected != T + 1:
        raise ValueError(f"partition covers [1, {expected - 1}] instead of [1, {T}]")


def sqrt_table(T: int) -> np.ndarray:
    """``out[n] = sqrt(n)`` for ``n = 0..T``."""
    return np.sqrt(np.arange(T + 1, dtype=np.float64))


def parse_interval(text: str) -> Interval:
    a, b = text.split(":")
    return Interval(int(a), int(b))

