import itertools
import math

import numpy as np
import pytest

from interval_regret.baselines import Constant
from interval_regret.calibration import all_sequences, estimate_alpha0, exact_mean_payoff
from interval_regret.payoff import (
    aligned_payoff_value,
    payoff_bruteforce_oracle,
    payoff_dp,
    payoff_value,
)
from interval_regret.predictor import (
    ExactPredictor,
    IntervalPredictor,
    MagnitudeModel,
    aligned_fast_predict_step,
    aligned_precompute,
    aligned_reference_step,
    exact_predict_step,
    mc_game_payoffs,
    mc_precompute,
    mc_predict_step,
    real_precompute,
    real_valued_predict_step,
    run_game,
    sample_completion_batch,
    sample_completions,
    stitched_payoff,
)
from interval_regret.sequence import build_prefix_sums


def _rand_bits(rng, n):
    return rng.choice([-1.0, 1.0], n)


# ---------------------------------------------------------------- exact


def test_exact_symmetric_start():
    assert exact_predict_step([], 1.0, 1) == 0.0
    for T in (2, 5, 8):
        assert exact_predict_step([], 1.7, T) == pytest.approx(0.0, abs=1e-12)


def test_exact_against_bruteforce_reimplementation():
    s = [1.0, 1.0]
    up = [payoff_bruteforce_oracle(s + [1.0] + list(u), 2.0) for u in itertools.product([-1.0, 1.0], repeat=1)]
    down = [payoff_bruteforce_oracle(s + [-1.0] + list(u), 2.0) for u in itertools.product([-1.0, 1.0], repeat=1)]
    expected = (np.mean(up) - np.mean(down)) / 2
    assert exact_predict_step(s, 2.0, 4) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.5481881585886565, abs=1e-12)


def test_exact_refuses_large_T():
    with pytest.raises(ValueError):
        exact_predict_step([], 1.0, 17)


def _cover_table(T, alpha):
    """Exact bets for every +-1 prefix, via one table of payoffs over all sequences."""
    P = payoff_value(all_sequences(T), alpha).reshape((2,) * T)
    bets = {}
    for t in range(T):
        g = P.mean(axis=tuple(range(t + 1, T))) if t + 1 < T else P
        diff = (np.take(g, 1, axis=t) - np.take(g, 0, axis=t)) / 2
        bets[t] = diff
    return bets


@pytest.mark.parametrize("T", [4, 8, 12])
def test_bounded_difference(T):
    for alpha in (0.5, 1.0, 2.0):
        for t, diff in _cover_table(T, alpha).items():
            assert np.abs(diff).max() <= 1.0 + 1e-12


def test_exact_step_matches_cover_table():
    T, alpha = 8, 1.5
    table = _cover_table(T, alpha)
    rng = np.random.default_rng(5)
    for _ in range(20):
        t = int(rng.integers(0, T))
        s = _rand_bits(rng, t)
        idx = tuple(int(v > 0) for v in s)
        assert exact_predict_step(s, alpha, T) == pytest.approx(table[t][idx], abs=1e-12)


def test_feasibility_iff_mean_nonpositive():
    T = 8
    root = estimate_alpha0(T, tolerance=1e-12).alpha0
    X = all_sequences(T)
    for alpha, feasible in ((root + 0.01, True), (root - 0.05, False)):
        pred = ExactPredictor(T, alpha)
        slack = np.array([run_game(pred, x).payoff - payoff_value(x, alpha) for x in X])
        # Cover's identity: payoff = P(X) - E[P(S)] for every X
        np.testing.assert_allclose(slack, -exact_mean_payoff(T, alpha), atol=1e-9)
        assert bool(slack.min() >= -1e-9) is feasible


# ---------------------------------------------------------------- mc


def test_completion_layout():
    U = sample_completions(8, 123)
    assert [u.size for u in U] == list(range(7, -1, -1))
    assert all(set(np.unique(u)) <= {-1.0, 1.0} for u in U)
    flat = np.random.default_rng(123).integers(0, 2, size=28) * 2.0 - 1.0
    np.testing.assert_array_equal(np.concatenate(U), flat)


def test_precompute_deterministic():
    a = mc_precompute(16, 1.9, seed=7)
    b = mc_precompute(16, 1.9, seed=7)
    for x, y in zip(a.completions + a.u_suffix + a.u_heights, b.completions + b.u_suffix + b.u_heights):
        np.testing.assert_array_equal(x, y)
    c = mc_precompute(16, 1.9, seed=8)
    assert any(not np.array_equal(x, y) for x, y in zip(a.completions, c.completions))


def test_precomputed_suffixes_match_full_dp():
    state = mc_precompute(12, 1.3, seed=3)
    for u, suf, uh in zip(state.completions, state.u_suffix, state.u_heights):
        for m in range(u.size):
            assert suf[m] == pytest.approx(payoff_dp(u[m:], 1.3)[0], abs=1e-9)
        assert suf[u.size] == 0.0
        np.testing.assert_allclose(uh, build_prefix_sums(u))


def test_mc_step_example():
    U = [np.ones(3), np.ones(2), np.ones(1), np.zeros(0)]
    state = mc_precompute(4, 2.0, completions=U)
    hi = payoff_bruteforce_oracle([1, 1, 1, 1], 2.0)
    lo = payoff_bruteforce_oracle([-1, 1, 1, 1], 2.0)
    assert (hi, lo) == (pytest.approx(0.0), pytest.approx(3 - 2 * math.sqrt(3) - 1))
    assert mc_predict_step(state, [], 0) == pytest.approx((hi - lo) / 2, abs=1e-12)
    assert mc_predict_step(state, [], 0) == pytest.approx(0.7320508075688772, abs=1e-12)


def test_stitching_matches_materialized_dp():
    rng = np.random.default_rng(11)
    for _ in range(60):
        T = int(rng.integers(1, 40))
        t = int(rng.integers(0, T))
        alpha = float(rng.uniform(0.3, 3))
        s, u = _rand_bits(rng, t), _rand_bits(rng, T - t - 1)
        state = mc_precompute(T, alpha, completions=[u if k == t else np.zeros(T - k - 1) for k in range(T)])
        state.sync(s)
        pref = np.asarray(state.prefix_best)
        hs = state.heights[t] - np.asarray(state.heights)
        for b in (1.0, -1.0):
            got = stitched_payoff(pref, hs, b, state.u_heights[t], state.u_suffix[t], alpha)
            assert got == pytest.approx(payoff_dp(np.concatenate([s, [b], u]), alpha)[0], abs=1e-9)


def test_prefix_payoffs_maintained_incrementally():
    state = mc_precompute(20, 1.4, seed=1)
    x = _rand_bits(np.random.default_rng(2), 20)
    state.sync(x)
    for i in range(21):
        assert state.prefix_best[i] == pytest.approx(payoff_value(x[:i], 1.4) if i else 0.0, abs=1e-9)
    # a different history resets the running data
    state.sync(-x[:5])
    assert len(state.observed) == 5
    assert state.prefix_best[5] == pytest.approx(payoff_value(-x[:5], 1.4), abs=1e-9)


def test_mc_step_range_errors():
    state = mc_precompute(4, 1.0, seed=0)
    with pytest.raises(IndexError):
        mc_predict_step(state, [1.0], 0)
    with pytest.raises(IndexError):
        mc_predict_step(state, [1.0] * 4, 4)


def test_mc_predictions_bounded():
    rng = np.random.default_rng(9)
    count = 0
    while count < 20_000:
        T = int(rng.integers(1, 30))
        pred = IntervalPredictor(T, float(rng.uniform(0.2, 4)), "mc", int(rng.integers(1 << 30)))
        res = run_game(pred, _rand_bits(rng, T))
        assert np.all(np.abs(res.predictions) <= 1.0)
        assert res.clamp_count == 0
        count += T


def test_causality():
    T = 16
    rng = np.random.default_rng(4)
    x = _rand_bits(rng, T)
    for mode in ("mc", "aligned"):
        base = run_game(IntervalPredictor(T, 1.8, mode, seed=42), x).predictions
        for _ in range(10):
            cut = int(rng.integers(0, T))
            y = x.copy()
            y[cut:] = _rand_bits(rng, T - cut)
            other = run_game(IntervalPredictor(T, 1.8, mode, seed=42), y).predictions
            np.testing.assert_array_equal(base[:cut + 1], other[:cut + 1])


def test_sign_antisymmetry():
    T = 16
    rng = np.random.default_rng(6)
    for _ in range(10):
        U = sample_completions(T, int(rng.integers(1 << 30)))
        x = _rand_bits(rng, T)
        for mode in ("mc", "aligned"):
            a = run_game(IntervalPredictor(T, 1.5, mode, completions=U), x).predictions
            b = run_game(IntervalPredictor(T, 1.5, mode, completions=[-u for u in U]), -x).predictions
            np.testing.assert_allclose(a, -b, atol=1e-12)


def test_batched_games_match_single_games():
    T, alpha = 8, 1.6
    rng = np.random.default_rng(8)
    x = _rand_bits(rng, T)
    batch = sample_completion_batch(T, 5, rng)
    got = mc_game_payoffs(x, alpha, batch)
    for r in range(5):
        U = [c[r] for c in batch]
        assert got[r] == pytest.approx(run_game(IntervalPredictor(T, alpha, "mc", completions=U), x).payoff,
                                       abs=1e-12)


# ---------------------------------------------------------------- aligned


def test_aligned_step_example():
    state = aligned_precompute(2, 1.0, completions=[np.ones(1), np.zeros(0)])
    hi = max(2 - math.sqrt(2), 0.0)
    lo = max(0 - math.sqrt(2), 0.0)
    assert aligned_fast_predict_step(state, [], 0) == pytest.approx((hi - lo) / 2, abs=1e-12)
    assert state.last_candidates == 2


def test_aligned_matches_reference():
    T = 32
    rng = np.random.default_rng(12)
    for g in range(20):
        alpha = float(rng.uniform(0.5, 3.5))
        state = aligned_precompute(T, alpha, seed=g)
        x = _rand_bits(rng, T)
        for t in range(T):
            got = aligned_fast_predict_step(state, x[:t], t)
            assert got == pytest.approx(aligned_reference_step(state, x[:t], t), abs=1e-9)
            assert state.last_candidates == 6


def test_aligned_requires_power_of_two():
    with pytest.raises(ValueError):
        aligned_precompute(12, 1.0)


def test_aligned_uses_same_completions_as_mc():
    a = mc_precompute(16, 2.0, seed=3)
    b = aligned_precompute(16, 2.0, seed=3)
    for x, y in zip(a.completions, b.completions):
        np.testing.assert_array_equal(x, y)


def test_aligned_prefix_values():
    state = aligned_precompute(16, 1.2, seed=0)
    x = _rand_bits(np.random.default_rng(1), 16)
    state.sync(x)
    for p in (1, 2, 4, 8, 16):
        assert state.prefix_best[p] == pytest.approx(aligned_payoff_value(x[:p], 1.2), abs=1e-12)


# ---------------------------------------------------------------- real valued


def test_magnitude_models_have_mean_one():
    rng = np.random.default_rng(0)
    assert MagnitudeModel("point-mass-one").check_mean(rng)
    assert MagnitudeModel("half-normal-mean-one").check_mean(rng)
    emp = MagnitudeModel("empirical", np.array([0.5, 2.0, -3.0, 0.1]))
    assert emp.values.min() >= 0 and emp.check_mean(rng)
    with pytest.raises(ValueError):
        MagnitudeModel("lognormal")


def test_point_mass_reduces_to_mc():
    T = 24
    x = _rand_bits(np.random.default_rng(3), T)
    a = run_game(IntervalPredictor(T, 1.7, "mc", seed=99), x)
    b = run_game(IntervalPredictor(T, 1.7, "real", seed=99, model=MagnitudeModel()), x)
    np.testing.assert_array_equal(a.predictions, b.predictions)


def test_real_stitching_matches_dp():
    T, alpha = 20, 2.2
    state = real_precompute(T, alpha, seed=5, model=MagnitudeModel("half-normal-mean-one"))
    m = np.random.default_rng(1).normal(size=T)
    for t in range(T):
        real_valued_predict_step(state, m[:t], t)
        mag = state.insert_magnitudes[t]
        pref = np.asarray(state.prefix_best)
        hs = state.heights[t] - np.asarray(state.heights)
        got = stitched_payoff(pref, hs, mag, state.u_heights[t], state.u_suffix[t], alpha)
        full = np.concatenate([m[:t], [mag], state.completions[t]])
        assert got == pytest.approx(payoff_dp(full, alpha)[0], abs=1e-9)


def test_real_clamp_counter():
    state = real_precompute(8, 4.0, seed=0, model=MagnitudeModel("half-normal-mean-one"), bet="plain")
    state.insert_magnitudes[:] = 5.0
    preds = [real_valued_predict_step(state, np.full(t, 3.0), t) for t in range(8)]
    assert all(abs(p) <= 1 for p in preds)
    assert state.clamp_count >= 1


def test_size_biased_bet_never_clamps():
    state = real_precompute(8, 4.0, seed=0, model=MagnitudeModel("half-normal-mean-one"))
    preds = [real_valued_predict_step(state, np.full(t, 3.0), t) for t in range(8)]
    assert all(abs(p) <= 1 for p in preds)
    assert state.clamp_count == 0


@pytest.mark.parametrize("model", [MagnitudeModel("half-normal-mean-one"),
                                   MagnitudeModel("empirical", np.array([0.2, 0.5, 1.0, 3.0]))])
def test_size_biased_sampler(model):
    # size-biased draws r satisfy E[g(r) / r] = E_model[g(r)]; with g(r) = r^2: E[r] = E_model[r^2]
    rng = np.random.default_rng(3)
    n = 200_000
    sb = model.sample_size_biased(rng, n)
    plain = model.sample(rng, n)
    se = math.hypot(sb.std(), (plain ** 2).std()) / math.sqrt(n)
    assert abs(sb.mean() - (plain ** 2).mean()) <= 3 * se
    if model.kind == "half-normal-mean-one":
        assert abs(sb.mean() - math.pi / 2) <= 3 * sb.std() / math.sqrt(n)


def test_real_mode_mismatch():
    state = mc_precompute(4, 1.0)
    with pytest.raises(ValueError):
        real_valued_predict_step(state, [], 0)


@pytest.mark.slow
def test_real_valued_guarantee():
    T, games = 64, 500
    model = MagnitudeModel("half-normal-mean-one")
    alpha = estimate_alpha0(T, n=4000, seed=2024, model=model, tolerance=1e-3).ci_high + 0.1
    realized, benchmark = [], []
    for g in range(games):
        x = MagnitudeModel("half-normal-mean-one").sample(np.random.default_rng([7, g]), T)
        res = run_game(IntervalPredictor(T, alpha, "real", seed=g, model=model), x)
        realized.append(res.payoff)
        benchmark.append(payoff_value(x, alpha))
    diff = np.asarray(realized) - np.asarray(benchmark)
    se = diff.std(ddof=1) / math.sqrt(games)
    assert np.mean(realized) >= np.mean(benchmark) - 3 * se


# ---------------------------------------------------------------- games


def test_run_game_constant_predictors():
    x = _rand_bits(np.random.default_rng(0), 30)
    assert run_game(Constant(0.0), x).payoff == 0.0
    assert run_game(Constant(1.0), x).payoff == pytest.approx(x.sum())


def test_run_game_horizon_mismatch():
    with pytest.raises(ValueError):
        run_game(IntervalPredictor(8, 1.0, "mc"), np.ones(7))


def test_run_game_hides_future():
    seen = []

    def spy(prefix):
        seen.append(prefix.copy())
        return 0.0

    x = np.array([1.0, -1.0, 1.0])
    run_game(spy, x)
    assert [s.tolist() for s in seen] == [[], [1.0], [1.0, -1.0]]
