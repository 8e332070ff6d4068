"""Reductions between bit prediction and the two-experts problem.

Expert payoffs live in [0, 1].  Two reductions are provided:

* symmetric: ``b_t = (b1_t - b2_t) / 2`` with arm probabilities
  ``((1 + bet) / 2, (1 - bet) / 2)``; the experts payoff equals
  ``(X1 + X2) / 2 + A`` where ``A`` is the bit-game payoff;
* one-sided: ``b_t = b2_t - b1_t`` with bets in [0, 1] and probabilities
  ``(1 - bet, bet)``; the experts payoff equals ``X1 + A``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class ExpertsInstance:
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        b1 = np.asarray(self.b1, dtype=np.float64)
        b2 = np.asarray(self.b2, dtype=np.float64)
        if b1.shape != b2.shape or b1.ndim != 1:
            raise ValueError("expert payoff streams must be 1-D and of equal length")
        for name, b in (("b1", b1), ("b2", b2)):
            if b.size and (b.min() < 0 or b.max() > 1):
                raise ValueError(f"{name} has payoffs outside [0, 1]")
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)

    @property
    def T(self) -> int:
        return self.b1.shape[0]

    @property
    def totals(self) -> tuple[float, float]:
        return float(self.b1.sum()), float(self.b2.sum())


@dataclass(frozen=True)
class ArmPolicy:
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=np.float64)
        p2 = np.asarray(self.p2, dtype=np.float64)
        if p1.shape != p2.shape:
            raise ValueError("policy columns differ in length")
        if np.any((p1 < 0) | (p1 > 1) | (p2 < 0) | (p2 > 1)):
            raise ValueError("arm probabilities must lie in [0, 1]")
        if not np.allclose(p1 + p2, 1.0, rtol=0, atol=1e-12):
            raise ValueError("arm probabilities must sum to one")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)


def experts_to_bits(inst: ExpertsInstance, scale: bool = False) -> np.ndarray:
    """Bit sequence ``(b1 - b2) / 2``; ``scale=True`` doubles it into [-1, 1]."""
    b = (inst.b1 - inst.b2) / 2.0
    if scale:
        # doubling the values halves the effective penalty in the experts guarantee
        log.info("scaling reduced sequence by 2 (experts penalty becomes alpha/2)")
        b = 2.0 * b
    return b


def bits_to_arm_policy(pred) -> ArmPolicy:
    """Arm probabilities ``((1 + bet) / 2, (1 - bet) / 2)`` from bets in [-1, 1]."""
    pred = np.atleast_1d(np.asarray(pred, dtype=np.float64))
    if np.any((pred < -1) | (pred > 1)):
        raise ValueError("bets must lie in [-1, 1]")
    return ArmPolicy((1.0 + pred) / 2.0, (1.0 - pred) / 2.0)


def policy_to_bits(policy: ArmPolicy) -> np.ndarray:
    return policy.p1 - policy.p2


def experts_payoff(inst: ExpertsInstance, policy: ArmPolicy, check: bool = False) -> float:
    """``sum_t b1_t p1_t + b2_t p2_t``.

    With ``check=True`` also verifies ``(X1 + X2) / 2 + A`` where ``A`` is the
    bit-game payoff of ``p1 - p2`` on the unscaled reduced sequence.
    """
    if policy.p1.shape[0] != inst.T:
        raise ValueError(f"policy length {policy.p1.shape[0]} != instance length {inst.T}")
    total = float(np.sum(inst.b1 * policy.p1 + inst.b2 * policy.p2))
    if check:
        x1, x2 = inst.totals
        bit_payoff = float(np.sum(experts_to_bits(inst) * policy_to_bits(policy)))
        other = (x1 + x2) / 2.0 + bit_payoff
        if abs(total - other) > IDENTITY_TOL * max(1.0, abs(total)):
            raise ArithmeticError(f"experts identity violated: {total} vs {other}")
    return total


def one_sided_reduction(inst: ExpertsInstance) -> np.ndarray:
    """Sequence ``b2 - b1`` for one-sided bets."""
    return inst.b2 - inst.b1


def one_sided_policy(bets) -> ArmPolicy:
    """Arm probabilities ``(1 - bet, bet)`` for one-sided bets in [0, 1]."""
    bets = np.atleast_1d(np.asarray(bets, dtype=np.float64))
    if np.any((bets < 0) | (bets > 1)):
        raise ValueError("one-sided bets must lie in [0, 1]")
    return ArmPolicy(1.0 - bets, bets)


def one_sided_payoff(inst: ExpertsInstance, bets) -> float:
    """Experts payoff of one-sided bets, as ``X1 + sum_t bet_t (b2_t - b1_t)``."""
    policy = one_sided_policy(bets)
    return experts_payoff(inst, policy)


def regrets(inst: ExpertsInstance, policy: ArmPolicy) -> dict:
    """Regret to each expert, to the better one and to their average."""
    x1, x2 = inst.totals
    a = experts_payoff(inst, policy)
    return {
        "payoff": a,
        "X1": x1,
        "X2": x2,
        "R1": x1 - a,
        "R2": x2 - a,
        "R_max": max(x1, x2) - a,
        "R_avg": (x1 + x2) / 2.0 - a,
    }


def read_instance(path: str | Path) -> ExpertsInstance:
    """Read the ``t,b1,b2`` CSV."""
    b1, b2 = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"t", "b1", "b2"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            b1.append(float(row["b1"]))
            b2.append(float(row["b2"]))
    return ExpertsInstance(np.array(b1), np.array(b2))


def write_instance(path: str | Path, inst: ExpertsInstance) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "b1", "b2"])
        for t, (a, b) in enumerate(zip(inst.b1, inst.b2), 1):
            w.writerow([t, repr(float(a)), repr(float(b))])


def write_policy(path: str | Path, policy: ArmPolicy) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "p1", "p2"])
        for t, (a, b) in enumerate(zip(policy.p1, policy.p2), 1):
            w.writerow([t, repr(float(a)), repr(float(b))])
