"""Prediction with amortized per-interval regret guarantees."""

from .calibration import estimate_alpha0, exact_mean_payoff, mc_mean_payoff
from .payoff import (
    aligned_payoff_dp,
    payoff_bruteforce_oracle,
    payoff_dp,
    payoff_of_partition,
    payoff_value,
)
from .predictor import (
    IntervalPredictor,
    MagnitudeModel,
    aligned_fast_predict_step,
    exact_predict_step,
    mc_precompute,
    mc_predict_step,
    real_valued_predict_step,
    run_game,
)
from .sequence import Interval, aligned_decompose, build_prefix_sums, height, is_aligned

__version__ = "0.1.0"
