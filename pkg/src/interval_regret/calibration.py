"""Estimating the smallest feasible penalty alpha_0(T).

The interval payoff with penalty ``alpha`` is achievable by some predictor
iff its mean over uniformly random +-1 sequences is at most zero.  The
mean is computed exactly by enumeration for small ``T`` and by Monte
Carlo otherwise.  Bisection reuses one fixed sample for every probe
(common random numbers), so the sample mean is exactly non-increasing
in ``alpha``.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .payoff import _check_alpha, aligned_payoff_value, payoff_value
from .predictor import MagnitudeModel

EXACT_MAX_T = 16
BRACKET = (0.5, 10.0)


class CalibrationError(RuntimeError):
    pass


@functools.lru_cache(maxsize=8)
def all_sequences(T: int) -> np.ndarray:
    """Every +-1 sequence of length ``T`` as rows, in binary-counting order."""
    if T > EXACT_MAX_T:
        raise ValueError(f"enumeration refuses T={T} > {EXACT_MAX_T}")
    codes = np.arange(2 ** T)[:, None]
    bits = (codes >> np.arange(T - 1, -1, -1)[None, :]) & 1
    out = bits.astype(np.float64) * 2.0 - 1.0
    out.flags.writeable = False
    return out


def _payoffs(sample: np.ndarray, alpha: float, aligned: bool) -> np.ndarray:
    if aligned:
        return aligned_payoff_value(sample, alpha)
    return payoff_value(sample, alpha)


def exact_mean_payoff(T: int, alpha: float, aligned: bool = False) -> float:
    """Average payoff over all ``2**T`` sequences."""
    alpha = _check_alpha(alpha)
    return float(_payoffs(all_sequences(T), alpha, aligned).mean())


def random_sequences(T: int, n: int, seed: int, model: MagnitudeModel | None = None) -> np.ndarray:
    """``n`` uniform +-1 sequences (times mean-one magnitudes if ``model`` is given)."""
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=(n, T)).astype(np.float64) * 2.0 - 1.0
    if model is not None:
        x *= model.sample(rng, (n, T))
    return x


def _mean_se(values: np.ndarray) -> tuple[float, float, float]:
    n = values.shape[0]
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if n > 1 else 0.0
    return mean, sd, sd / math.sqrt(n)


def mc_mean_payoff(T: int, alpha: float, n: int, seed: int = 0, aligned: bool = False,
                   model: MagnitudeModel | None = None) -> tuple[float, float]:
    """Sample mean and standard error (``sd / sqrt(n)``) of the payoff over ``n`` sequences."""
    alpha = _check_alpha(alpha)
    if n < 2:
        raise ValueError("need at least two samples for a standard error")
    mean, _, se = _mean_se(_payoffs(random_sequences(T, n, seed, model), alpha, aligned))
    return mean, se


@dataclass
class Probe:
    alpha: float
    mean: float
    sd: float
    stderr: float
    n: int


@dataclass
class CalibrationReport:
    T: int
    mode: str
    aligned: bool
    n: int
    seed: int | None
    alpha0: float
    ci_low: float | None = None
    ci_high: float | None = None
    bracket: tuple[float, float] = BRACKET
    probes: list[Probe] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        return d

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "mean", "stderr", "n"])
            for p in sorted(self.probes, key=lambda p: p.alpha):
                w.writerow([repr(p.alpha), repr(p.mean), repr(p.stderr), p.n])


class _Evaluator:
    """Means over one fixed sample (or the full enumeration)."""

    def __init__(self, T, n, seed, aligned, exact, model=None):
        self.aligned = aligned
        self.sample = all_sequences(T) if exact else random_sequences(T, n, seed, model)
        self.probes: list[Probe] = []

    def __call__(self, alpha: float) -> Probe:
        mean, sd, se = _mean_se(_payoffs(self.sample, alpha, self.aligned))
        p = Probe(float(alpha), mean, sd, se, self.sample.shape[0])
        self.probes.append(p)
        return p


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    """Root of a non-increasing ``f`` on ``[lo, hi]``, finished with a secant step."""
    flo, fhi = f(lo), f(hi)
    if not (flo >= 0 >= fhi):
        raise CalibrationError(
            f"bracket [{lo}, {hi}] does not straddle zero: f(lo)={flo:.6g}, f(hi)={fhi:.6g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm > 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    if flo == fhi:
        return 0.5 * (lo + hi)
    # the sample mean is piecewise linear in alpha, so this is exact without a kink inside
    return min(hi, max(lo, lo + flo * (hi - lo) / (flo - fhi)))


def estimate_alpha0(T: int, n: int = 400, seed: int = 0, aligned: bool = False,
                    tolerance: float = 1e-3, exact: bool | None = None, z: float = 1.96,
                    bracket: tuple[float, float] = BRACKET,
                    model: MagnitudeModel | None = None) -> CalibrationReport:
    """Bisect for the ``alpha`` at which the mean payoff crosses zero.

    ``exact`` defaults to enumeration when ``T <= 16``.  In Monte Carlo
    mode the report carries the interval of ``alpha`` over which zero lies
    within ``z`` standard errors of the mean.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if exact is None:
        exact = T <= EXACT_MAX_T and model is None
    ev = _Evaluator(T, n, seed, aligned, exact, model)
    lo, hi = bracket
    root = _bisect(lambda a: ev(a).mean, lo, hi, tolerance)
    report = CalibrationReport(T, "exact" if exact else "montecarlo", aligned,
                               ev.sample.shape[0], None if exact else seed, root,
                               bracket=tuple(bracket))
    if not exact:
        try:
            report.ci_low = _bisect(lambda a: (p := ev(a)).mean - z * p.stderr, lo, hi, tolerance)
            report.ci_high = _bisect(lambda a: (p := ev(a)).mean + z * p.stderr, lo, hi, tolerance)
        except CalibrationError:
            pass
    report.probes = ev.probes
    return report


def grid_report(T: int, alphas, n: int = 400, seed: int = 0, aligned: bool = False,
                exact: bool | None = None, model: MagnitudeModel | None = None) -> CalibrationReport:
    """Mean payoff on an ``alpha`` grid; ``alpha0`` is interpolated at the first sign change."""
    if exact is None:
        exact = T <= EXACT_MAX_T and model is None
    ev = _Evaluator(T, n, seed, aligned, exact, model)
    probes = [ev(a) for a in sorted(alphas)]
    root = math.nan
    for a, b in zip(probes, probes[1:]):
        if a.mean > 0 >= b.mean:
            root = a.alpha + a.mean * (b.alpha - a.alpha) / (a.mean - b.mean)
            break
    if math.isnan(root):
        raise CalibrationError(
            f"grid [{probes[0].alpha}, {probes[-1].alpha}] does not bracket the root: "
            f"means {probes[0].mean:.6g} .. {probes[-1].mean:.6g}")
    return CalibrationReport(T, "exact" if exact else "montecarlo", aligned,
                             ev.sample.shape[0], None if exact else seed, root,
                             bracket=(probes[0].alpha, probes[-1].alpha), probes=probes)
