import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from interval_regret.calibration import estimate_alpha0
from interval_regret.experts import (
    ExpertsInstance,
    bits_to_arm_policy,
    experts_payoff,
    experts_to_bits,
    one_sided_payoff,
    one_sided_policy,
    one_sided_reduction,
    policy_to_bits,
    read_instance,
    regrets,
    write_instance,
    write_policy,
)
from interval_regret.payoff import payoff_dp
from interval_regret.predictor import ExactPredictor, IntervalPredictor, run_game


def _instance(rng, T):
    return ExpertsInstance(rng.random(T), rng.random(T))


def test_experts_to_bits_examples():
    same = ExpertsInstance(np.full(4, 0.3), np.full(4, 0.3))
    assert experts_to_bits(same).tolist() == [0.0] * 4
    one_zero = ExpertsInstance(np.ones(3), np.zeros(3))
    assert experts_to_bits(one_zero).tolist() == [0.5] * 3
    assert experts_to_bits(one_zero, scale=True).tolist() == [1.0] * 3
    inst = ExpertsInstance(np.array([1.0]), np.array([0.4]))
    assert experts_to_bits(inst)[0] == pytest.approx(0.3)
    assert experts_to_bits(inst, scale=True)[0] == pytest.approx(0.6)


@pytest.mark.parametrize("bet, probs", [(0.0, (0.5, 0.5)), (1.0, (1.0, 0.0)), (-0.5, (0.25, 0.75))])
def test_bits_to_arm_policy(bet, probs):
    pol = bits_to_arm_policy(bet)
    assert (pol.p1[0], pol.p2[0]) == probs


def test_bits_to_arm_policy_rejects_out_of_range():
    with pytest.raises(ValueError):
        bits_to_arm_policy(1.5)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=50))
def test_policy_roundtrip(bets):
    pol = bits_to_arm_policy(bets)
    assert np.allclose(policy_to_bits(pol), bets, atol=1e-15)
    assert np.all((pol.p1 >= 0) & (pol.p2 >= 0)) and np.allclose(pol.p1 + pol.p2, 1)


def test_experts_payoff_examples():
    inst = _instance(np.random.default_rng(0), 40)
    x1, x2 = inst.totals
    assert experts_payoff(inst, bits_to_arm_policy(np.zeros(40)), check=True) == pytest.approx((x1 + x2) / 2)
    assert experts_payoff(inst, bits_to_arm_policy(np.ones(40)), check=True) == pytest.approx(x1)


def test_identity_with_interval_predictor():
    rng = np.random.default_rng(1)
    inst = _instance(rng, 100)
    bits = experts_to_bits(inst)
    res = run_game(IntervalPredictor(100, 2.0, "mc", seed=3), bits)
    pol = bits_to_arm_policy(res.predictions)
    x1, x2 = inst.totals
    assert abs(experts_payoff(inst, pol, check=True) - ((x1 + x2) / 2 + res.payoff)) <= 1e-12


def test_length_mismatch():
    inst = _instance(np.random.default_rng(2), 5)
    with pytest.raises(ValueError):
        experts_payoff(inst, bits_to_arm_policy(np.zeros(4)))
    with pytest.raises(ValueError):
        ExpertsInstance(np.array([1.2]), np.array([0.0]))


def test_one_sided():
    rng = np.random.default_rng(3)
    inst = _instance(rng, 50)
    x1, x2 = inst.totals
    assert one_sided_payoff(inst, np.zeros(50)) == pytest.approx(x1)
    assert one_sided_payoff(inst, np.ones(50)) == pytest.approx(x2)
    bets = rng.random(50)
    direct = x1 + float(np.sum(bets * one_sided_reduction(inst)))
    assert abs(one_sided_payoff(inst, bets) - direct) <= 1e-12
    with pytest.raises(ValueError):
        one_sided_policy([-0.1])


def test_regret_bookkeeping():
    inst = ExpertsInstance(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    r = regrets(inst, bits_to_arm_policy([1.0, -1.0]))
    assert r["payoff"] == 2.0 and r["R_max"] == -1.0 and r["R_avg"] == -1.0


def test_per_interval_experts_guarantee():
    """Exact predictor through the reduction: A' >= sum_i max_j X_ji - alpha/2 sqrt|X_i|."""
    T = 8
    alpha = estimate_alpha0(T, tolerance=1e-12).alpha0 + 0.01
    rng = np.random.default_rng(4)
    for _ in range(40):
        inst = ExpertsInstance(rng.choice([0.0, 0.5, 1.0], T), rng.random(T))
        b = experts_to_bits(inst, scale=True)
        res = run_game(ExactPredictor(T, alpha), b)
        pol = bits_to_arm_policy(res.predictions)
        payoff = experts_payoff(inst, pol, check=True)
        _, part, _ = payoff_dp(b, alpha)
        bound = sum(max(inst.b1[iv.start - 1:iv.end].sum(), inst.b2[iv.start - 1:iv.end].sum())
                    - alpha / 2 * np.sqrt(len(iv)) for iv in part)
        assert payoff >= bound - 1e-9


def test_csv_roundtrip(tmp_path):
    inst = _instance(np.random.default_rng(5), 7)
    write_instance(tmp_path / "inst.csv", inst)
    back = read_instance(tmp_path / "inst.csv")
    np.testing.assert_array_equal(back.b1, inst.b1)
    np.testing.assert_array_equal(back.b2, inst.b2)
    write_policy(tmp_path / "pol.csv", bits_to_arm_policy(np.zeros(7)))
    assert (tmp_path / "pol.csv").read_text().splitlines()[0] == "t,p1,p2"
