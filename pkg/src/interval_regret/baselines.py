"""Reference predictors: constant experts and exponential weights over them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sequence import build_prefix_sums, check_partition


def default_eta(T: int) -> float:
    return math.sqrt(2.0 * math.log(2.0) / T)


@dataclass
class ExpertEnsemble:
    """Exponential weights over fixed experts (by default the constants +1 and -1)."""

    eta: float
    experts: np.ndarray = field(default_factory=lambda: np.array([1.0, -1.0]))
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"learning rate must be positive, got {self.eta}")
        self.experts = np.asarray(self.experts, dtype=np.float64)
        if self.weights is None:
            self.weights = np.full(self.experts.shape, 1.0 / self.experts.size)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        self.weights = self.weights / self.weights.sum()

    def predict(self) -> float:
        return float(self.weights @ self.experts)

    def update(self, b: float) -> None:
        # log-domain shift keeps the largest weight at exp(0)
        logw = np.log(self.weights) + self.eta * b * self.experts
        logw -= logw.max()
        w = np.exp(logw)
        self.weights = w / w.sum()


def weighted_majority_step(ens: ExpertEnsemble, observed=()) -> float:
    """Update ``ens`` with the newly ``observed`` values, then return its bet."""
    for b in observed:
        ens.update(float(b))
    return ens.predict()


class WeightedMajority:
    """Callable wrapper replaying the prefix into an :class:`ExpertEnsemble`."""

    def __init__(self, T: int, eta: float | None = None):
        self.T = T
        self.eta = default_eta(T) if eta is None else eta
        self.ens = ExpertEnsemble(self.eta)
        self._seen = 0
        self.clamp_count = 0

    def __call__(self, prefix) -> float:
        if len(prefix) < self._seen:
            self.ens = ExpertEnsemble(self.eta)
            self._seen = 0
        pred = weighted_majority_step(self.ens, prefix[self._seen:])
        self._seen = len(prefix)
        return pred


class Constant:
    def __init__(self, value: float, T: int | None = None):
        self.value = float(value)
        self.T = T
        self.clamp_count = 0

    def __call__(self, prefix) -> float:
        return self.value


def best_expert_hindsight(seq) -> float:
    """Payoff of the better constant expert: ``|h([1, T])|``."""
    return float(abs(np.sum(np.asarray(seq, dtype=np.float64))))


def best_partition_expert_payoff(seq, part) -> float:
    """Best constant expert chosen separately on each interval of ``part``."""
    seq = np.asarray(seq, dtype=np.float64)
    check_partition(part, seq.shape[0])
    c = build_prefix_sums(seq)
    return float(sum(abs(c[iv.end] - c[iv.start - 1]) for iv in part))
