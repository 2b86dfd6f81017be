"""Margin-dependent Elo ratings that predict full point-spread and point-total distributions."""

from .backtest import (
    BacktestRecord,
    broken_model_control,
    home_field_ratio,
    mean_absolute_error,
    model_home_field_ratio,
    percentile_diagnostic,
    walk_forward,
)
from .calibration import (
    default_lattice,
    initial_book,
    initial_ratings,
    min_bias_survival,
    regress_to_mean,
    tune,
)
from .distribution import (
    Pmf,
    SurvivalCurve,
    mean_from_survival,
    median,
    orthogonal_points,
    pmf_from_survival,
    predict_survival,
    quantile,
    summarize,
    survival_from_pmf,
)
from .league import exact_poisson_win_rate, run_toy_league, synthetic_benchmark
from .ratings import GameRecord, HyperParams, MarginLattice, Mode, RatingBook, win_probability
from .storage import load_book, load_games, save_book, save_games

__version__ = "0.1.0"
