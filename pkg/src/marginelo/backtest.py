"""Walk-forward validation of predicted distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import groupby
from typing import Sequence

import numpy as np

from .calibration import initial_book
from .distribution import (
    SurvivalCurve,
    integer_pmf,
    mean_from_survival,
    median,
    predict_survival,
)
from .ratings import (
    GameRecord,
    HyperParams,
    MarginLattice,
    Mode,
    RatingBook,
    comparison_value,
    observed_outcome,
)


@dataclass
class BacktestRecord:
    game: GameRecord
    prediction: SurvivalCurve
    observed: float
    percentile: float
    median: float
    mean: float

    @property
    def residual(self) -> float:
        return self.observed - self.median


def percentile_of(curve: SurvivalCurve, observed: float) -> float:
    """P(outcome > observed) + 1/2 P(outcome = observed): the curve read at ``observed``."""
    return float(np.clip(curve.at(observed), 0.0, 1.0))


def walk_forward(games: Sequence[GameRecord], hyperparams: HyperParams | None, mode: Mode,
                 burn_in: int = 1, book: RatingBook | None = None,
                 lattice: MarginLattice | None = None) -> list[BacktestRecord]:
    """Predict each game from strictly earlier games, then ingest it.

    Without a starting ``book`` the first ``burn_in`` seasons seed the min-bias
    initial ratings; they are rated but not scored.  Games sharing a date are
    all priced before any of them is ingested, and a new season's offseason
    regression is applied before its first date is priced.
    """
    mode = Mode(mode)
    games = sorted((g for g in games if g.played), key=lambda g: g.date)
    if book is None:
        if burn_in < 1:
            raise ValueError("need at least one burn-in season to initialise ratings")
        seasons = sorted({g.season for g in games})
        warm = set(seasons[:burn_in])
        pool = [g for g in games if g.season in warm]
        if not pool:
            return []
        book = initial_book(pool, mode, hyperparams, lattice, track_history=False)
        book.rate_games(pool)
        games = [g for g in games if g.season not in warm]
    else:
        book = book.copy()
        book.track_history = False
        if hyperparams is not None:
            book.params = hyperparams

    records = []
    for day, group in groupby(games, key=lambda g: g.date):
        group = list(group)
        # the offseason regression is known before the new season's first kickoff
        book.advance_season(max(g.season for g in group))
        for g in group:
            curve = predict_survival(book, g.home, g.away, day, g.neutral_site,
                                     allow_new=True)
            obs = comparison_value(g, mode)
            records.append(BacktestRecord(g, curve, obs, percentile_of(curve, obs),
                                          median(curve), mean_from_survival(curve)))
        book.rate_date(group)
    return records


def _baseline(records) -> float:
    """Constant 'dumb' prediction: zero spread, or the lattice center for totals."""
    return records[0].prediction.lattice.center


def mean_absolute_error(records: Sequence[BacktestRecord],
                        estimator: str = "median") -> tuple[float, float]:
    """(model MAE, constant-baseline MAE) over the same games."""
    if not records:
        raise ValueError("no backtest records")
    obs = np.array([r.observed for r in records])
    pred = np.array([getattr(r, estimator) for r in records])
    return float(np.mean(np.abs(obs - pred))), float(np.mean(np.abs(obs - _baseline(records))))


def mae_by_season(records: Sequence[BacktestRecord], estimator: str = "median"):
    rows = []
    by_season = sorted(records, key=lambda r: r.game.season)
    for season, group in groupby(by_season, key=lambda r: r.game.season):
        group = list(group)
        model, base = mean_absolute_error(group, estimator)
        rows.append((season, len(group), model, base))
    return rows


def ranked_probability_score(records: Sequence[BacktestRecord]) -> float:
    """Mean squared gap between predicted and realised survival, averaged over lines."""
    scores = []
    for r in records:
        outcome = observed_outcome(r.observed, r.prediction.lines)
        scores.append(np.mean((r.prediction.probs - outcome) ** 2))
    return float(np.mean(scores))


OBJECTIVES = {
    "mae": lambda recs: mean_absolute_error(recs)[0],
    "mae_mean": lambda recs: mean_absolute_error(recs, "mean")[0],
    "rps": ranked_probability_score,
}


# -- percentile diagnostic ---------------------------------------------------

@dataclass
class PercentileDiagnostic:
    """Sorted percentiles minus their uniform expectation, with a per-rank band."""

    percentiles: np.ndarray
    deviations: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n(self) -> int:
        return self.deviations.size

    @property
    def expected(self) -> np.ndarray:
        return np.arange(1, self.n + 1) / (self.n + 1)

    @property
    def inside(self) -> np.ndarray:
        return (self.deviations >= self.lower) & (self.deviations <= self.upper)

    @property
    def inside_fraction(self) -> float:
        return float(self.inside.mean())

    def extreme_mask(self, tail: float = 0.1) -> np.ndarray:
        k = max(1, math.ceil(tail * self.n))
        mask = np.zeros(self.n, dtype=bool)
        mask[:k] = mask[-k:] = True
        return mask

    def extreme_outside_fraction(self, tail: float = 0.1) -> float:
        m = self.extreme_mask(tail)
        return float((~self.inside[m]).mean())


def uniform_order_band(n: int, n_mc: int = 10_000, seed: int = 0, level: float = 0.95,
                       max_cells: int = 20_000_000) -> tuple[np.ndarray, np.ndarray]:
    """Per-rank envelope of sorted uniform samples of size ``n``.

    Sorted samples come from normalised cumulative exponential spacings, which
    avoids sorting.  When ``n * n_mc`` is large the ranks are processed in
    blocks, regenerating the same draws from ``seed`` each pass.
    """
    alpha = (1 - level) / 2
    block = max(1, max_cells // n_mc)
    lower, upper = np.empty(n), np.empty(n)
    chunk = max(1, max_cells // (n + 1))
    for start in range(0, n, block):
        stop = min(n, start + block)
        rng = np.random.default_rng(seed)
        kept = []
        for done in range(0, n_mc, chunk):
            m = min(chunk, n_mc - done)
            spacings = rng.standard_exponential((m, n + 1))
            cums = np.cumsum(spacings, axis=1)
            kept.append(cums[:, start:stop] / cums[:, -1:])
        kept = np.concatenate(kept)
        lower[start:stop], upper[start:stop] = np.quantile(kept, [alpha, 1 - alpha], axis=0)
    return lower, upper


def _percentiles(records_or_values) -> np.ndarray:
    vals = [r.percentile if isinstance(r, BacktestRecord) else r for r in records_or_values]
    return np.asarray(vals, dtype=float)


def percentile_diagnostic(records, n_mc: int = 10_000, seed: int = 0,
                          level: float = 0.95) -> PercentileDiagnostic:
    pct = _percentiles(records)
    n = pct.size
    if n < 10:
        raise ValueError(f"percentile diagnostic needs at least 10 records, got {n}")
    expected = np.arange(1, n + 1) / (n + 1)
    lo, hi = uniform_order_band(n, n_mc, seed, level)
    return PercentileDiagnostic(pct, np.sort(pct) - expected, lo - expected, hi - expected)


def broken_model_control(records: Sequence[BacktestRecord], seed: int = 0,
                         permutation: Sequence[int] | None = None, n_mc: int = 10_000,
                         band_seed: int = 0) -> PercentileDiagnostic:
    """Diagnostic after pairing each prediction with another game's outcome."""
    if len(records) < 2:
        raise ValueError("broken-model control needs at least two records")
    if permutation is None:
        permutation = np.random.default_rng(seed).permutation(len(records))
    pct = [percentile_of(r.prediction, records[j].observed)
           for r, j in zip(records, permutation)]
    return percentile_diagnostic(pct, n_mc, band_seed)


# -- home-field histograms ---------------------------------------------------

DEFAULT_BINS = np.arange(-40.5, 41.5, 1.0)


@dataclass
class HistogramRatio:
    """Normalised home-biased over home-unbiased spread histograms.

    ``biased`` counts home - away spreads per bin, ``mirrored`` counts the
    negated spreads; the unbiased histogram is their sum.
    """

    edges: np.ndarray
    biased: np.ndarray
    mirrored: np.ndarray
    crossed: np.ndarray  # values whose spread and negation share the bin
    n: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def unbiased(self) -> np.ndarray:
        return self.biased + self.mirrored

    @property
    def valid(self) -> np.ndarray:
        return self.unbiased > 0

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.valid, 2 * self.biased / self.unbiased, np.nan)

    def populated(self, min_count: int = 1) -> np.ndarray:
        return self.unbiased >= min_count

    @property
    def stderr(self) -> np.ndarray:
        """Multinomial (delta-method) standard error of each ratio."""
        a, b, ab, n = self.biased, self.mirrored, self.crossed, self.n
        s = a + b
        var_a = a * (1 - a / n)
        var_b = b * (1 - b / n)
        cov = ab - a * b / n
        with np.errstate(invalid="ignore", divide="ignore"):
            var = 4 * (b**2 * var_a + a**2 * var_b - 2 * a * b * cov) / s**4
            return np.where(self.valid, np.sqrt(np.clip(var, 0, None)), np.nan)


def _histogram_ratio(values: np.ndarray, bins) -> HistogramRatio:
    edges = np.asarray(bins, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("need at least one spread")
    ia = np.digitize(values, edges) - 1
    ib = np.digitize(-values, edges) - 1
    nb = edges.size - 1
    ok_a = (ia >= 0) & (ia < nb)
    ok_b = (ib >= 0) & (ib < nb)
    biased = np.bincount(ia[ok_a], minlength=nb).astype(float)
    mirrored = np.bincount(ib[ok_b], minlength=nb).astype(float)
    both = ok_a & ok_b & (ia == ib)
    crossed = np.bincount(ia[both], minlength=nb).astype(float)
    return HistogramRatio(edges, biased, mirrored, crossed, values.size)


def home_field_ratio(games: Sequence[GameRecord], bins=DEFAULT_BINS) -> HistogramRatio:
    spreads = np.array([comparison_value(g, Mode.SPREAD) for g in games if g.played])
    return _histogram_ratio(spreads, bins)


def sample_outcomes(curve: SurvivalCurve, n: int, rng: np.random.Generator) -> np.ndarray:
    """Integer-lattice draws from a predicted curve."""
    pmf = integer_pmf(curve)
    cdf = np.cumsum(pmf.masses)
    idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    return pmf.support[np.minimum(idx, pmf.support.size - 1)]


def model_home_field_ratio(records: Sequence[BacktestRecord], n_samples: int = 10,
                           seed: int = 0, bins=DEFAULT_BINS) -> HistogramRatio:
    rng = np.random.default_rng(seed)
    draws = np.concatenate([sample_outcomes(r.prediction, n_samples, rng) for r in records])
    return _histogram_ratio(draws, bins)
