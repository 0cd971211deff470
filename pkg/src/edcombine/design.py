"""Supervised lag-matrix construction and the backtest splitting protocol.

A design row is one forecast origin t: the target is the series value at
t+h, predictors are lags 0..L-1 of the own series (spec A), plus lags of
the environmental series (spec B), plus lags of the other disease series
(spec C). Lag 0 is the value at the origin week itself, so no row's
predictors ever touch a week after its own origin.

The expanding schedule only ever fits on rows whose *target* week has
been observed by the decision week: at origin t and horizon h these are
the rows with origin <= t-h. This is what makes the sentinel-injection
no-look-ahead test pass at every horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, PanelTooShort, TooFewRows, UnknownDisease
from .panel import SeriesPanel

DEFAULT_LAG_ORDER = 8
SPEC_CHOICES = ("A", "B", "C")


@dataclass(frozen=True)
class LagDesign:
    target_disease: str
    horizon: int
    lag_order: int
    spec: str
    X: np.ndarray            # (n_rows, n_cols) predictors
    y: np.ndarray            # (n_rows,) targets y_{t+h}
    col_names: tuple[str, ...]
    origin_weeks: tuple[str, ...]   # week label of each row's origin t
    target_weeks: tuple[str, ...]   # week label of each row's target t+h

    def __post_init__(self):
        assert self.X.shape == (len(self.y), len(self.col_names))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_cols(self) -> int:
        return self.X.shape[1]

    def own_cols(self) -> slice:
        return slice(0, self.lag_order)

    def exog_cols(self) -> slice:
        """Env + cross-disease block (spec C); empty for spec A."""
        return slice(self.lag_order, self.n_cols)

    def to_npz(self, path) -> None:
        np.savez(
            path,
            X=self.X,
            y=self.y,
            col_names=np.array(self.col_names),
            origin_weeks=np.array(self.origin_weeks),
            target_weeks=np.array(self.target_weeks),
            meta=np.array([self.target_disease, str(self.horizon), str(self.lag_order), self.spec]),
        )

    @staticmethod
    def from_npz(path) -> "LagDesign":
        with np.load(path, allow_pickle=False) as z:
            meta = z["meta"]
            return LagDesign(
                target_disease=str(meta[0]),
                horizon=int(meta[1]),
                lag_order=int(meta[2]),
                spec=str(meta[3]),
                X=z["X"],
                y=z["y"],
                col_names=tuple(str(c) for c in z["col_names"]),
                origin_weeks=tuple(str(w) for w in z["origin_weeks"]),
                target_weeks=tuple(str(w) for w in z["target_weeks"]),
            )


def _lagged_block(series: np.ndarray, origins: np.ndarray, lag_order: int) -> np.ndarray:
    # column l holds series[origin - l]
    return np.stack([series[origins - l] for l in range(lag_order)], axis=1)


def build_lag_design(
    panel: SeriesPanel,
    disease: str,
    horizon: int,
    spec: str,
    lag_order: int = DEFAULT_LAG_ORDER,
) -> LagDesign:
    """Build the (X, y) matrix for one (disease, horizon, spec) triple.

    Column order is total and fixed: own lags 0..L-1, then each env
    variable in panel order with lags 0..L-1, then each other disease in
    panel order with lags 0..L-1.
    """
    if spec not in SPEC_CHOICES:
        raise DataError(f"unknown spec {spec!r}")
    if disease not in panel.disease_series:
        raise UnknownDisease(disease)
    if horizon < 1:
        raise DataError("horizon must be >= 1")
    T = panel.n_weeks
    if T < lag_order + horizon + 2:
        raise PanelTooShort(
            f"panel length {T} < lag_order + horizon + 2 = {lag_order + horizon + 2}"
        )
    n_rows = T - (lag_order - 1) - horizon
    origins = np.arange(lag_order - 1, lag_order - 1 + n_rows)
    own = panel.disease_series[disease]

    blocks = [_lagged_block(own, origins, lag_order)]
    names = [f"{disease}.l{l}" for l in range(lag_order)]
    if spec in ("B", "C"):
        for e in panel.env_names:
            blocks.append(_lagged_block(panel.env_series[e], origins, lag_order))
            names.extend(f"env.{e}.l{l}" for l in range(lag_order))
    if spec == "C":
        for d in panel.diseases:
            if d == disease:
                continue
            blocks.append(_lagged_block(panel.disease_series[d], origins, lag_order))
            names.extend(f"ed.{d}.l{l}" for l in range(lag_order))

    X = np.concatenate(blocks, axis=1)
    y = own[origins + horizon]
    return LagDesign(
        target_disease=disease,
        horizon=horizon,
        lag_order=lag_order,
        spec=spec,
        X=X,
        y=y.copy(),
        col_names=tuple(names),
        origin_weeks=tuple(panel.epi_weeks[i] for i in origins),
        target_weeks=tuple(panel.epi_weeks[i + horizon] for i in origins),
    )


@dataclass(frozen=True)
class SplitPlan:
    """Chronological 7:3 split with the evaluation tail of the forecast set."""

    n_rows: int
    train_end: int                 # train rows are [0, train_end)
    forecast_rows: tuple[int, ...]  # [train_end, n_rows)
    eval30_rows: tuple[int, ...]    # final 30% of the forecast set

    @property
    def train_rows(self) -> tuple[int, ...]:
        return tuple(range(self.train_end))

    @property
    def combiner_fit_rows(self) -> tuple[int, ...]:
        """First 70% of the forecast set (regression-combiner fit window)."""
        n_eval = len(self.eval30_rows)
        return self.forecast_rows[: len(self.forecast_rows) - n_eval]


def split_initial(design: LagDesign, ratio: float = 0.7) -> SplitPlan:
    n = design.n_rows
    if n < 10:
        raise TooFewRows(f"{n} design rows; need >= 10")
    train_end = int(np.floor(ratio * n))
    forecast = tuple(range(train_end, n))
    n_eval = int(np.floor((1.0 - ratio) * len(forecast)))
    eval30 = forecast[len(forecast) - n_eval:]
    return SplitPlan(n_rows=n, train_end=train_end, forecast_rows=forecast, eval30_rows=eval30)


@dataclass(frozen=True)
class ExpandingWindowSchedule:
    """One step per forecast-set week: fit on realized rows, predict one row.

    Step for predict row r fits on rows [0, fit_end) with
    fit_end = r - horizon + 1: exactly the rows whose target week is
    observed at r's origin. At h=1 this is every row before r.
    """

    horizon: int
    steps: tuple[tuple[int, int], ...]  # (fit_end, predict_row)


def expanding_schedule(split: SplitPlan, horizon: int) -> ExpandingWindowSchedule:
    steps = []
    for r in split.forecast_rows:
        fit_end = r - horizon + 1
        if fit_end < 2:
            raise TooFewRows(f"fit window for row {r} at h={horizon} has {fit_end} rows")
        steps.append((fit_end, r))
    return ExpandingWindowSchedule(horizon=horizon, steps=tuple(steps))


@dataclass(frozen=True)
class ColumnStats:
    mean: np.ndarray
    sd: np.ndarray            # sample sd (ddof=1); zero-variance columns carry sd=1
    zero_variance: np.ndarray  # bool mask of flagged constant columns


def column_stats(X: np.ndarray, fit_end: int) -> ColumnStats:
    if fit_end < 2:
        raise TooFewRows("need >= 2 fit rows to standardize")
    fit = X[:fit_end]
    mean = fit.mean(axis=0)
    sd = fit.std(axis=0, ddof=1)
    zero = sd == 0.0
    sd = np.where(zero, 1.0, sd)
    return ColumnStats(mean=mean, sd=sd, zero_variance=zero)


def standardize_columns(design: LagDesign, fit_end: int) -> tuple[LagDesign, ColumnStats]:
    """Z-score every predictor column using fit-row statistics only.

    The same statistics transform all rows (fit and predict); the target
    is left in original units. Constant columns are flagged and carried
    centered with unit scale, which pins their coefficients at zero.
    """
    stats = column_stats(design.X, fit_end)
    Xs = (design.X - stats.mean) / stats.sd
    out = LagDesign(
        target_disease=design.target_disease,
        horizon=design.horizon,
        lag_order=design.lag_order,
        spec=design.spec,
        X=Xs,
        y=design.y,
        col_names=design.col_names,
        origin_weeks=design.origin_weeks,
        target_weeks=design.target_weeks,
    )
    return out, stats
