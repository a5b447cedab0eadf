"""Fiscal-year ESG scores to daily series, index aggregation, and price adjustment.

The pipeline is: interpolate each company's fiscal-year scores to the trading
calendar (piecewise linear between fiscal-year marks, then a truncated
Gaussian moving average), aggregate component series into a market-level
series with normalized weights, form the relative rating
(stock - market)/market, and tilt quoted prices by an affinity parameter:
adjusted = quoted * (1 + gamma * rel). Negative adjusted prices are allowed;
the model does not require prices to stay positive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import (
    AllZeroWeights,
    CalendarBeforeFirstFY,
    CalendarMismatch,
    DivisionByZero,
    EmptyTable,
)
from .ingest import (
    FiscalEsgTable,
    PriceSeries,
    TradingCalendar,
    _as_value_array,
    _load_dated_values,
    _write_dated_values,
)

__all__ = [
    "EsgSeries",
    "RelEsgSeries",
    "SmootherConfig",
    "interpolate_esg_daily",
    "index_esg",
    "index_esg_dated",
    "relative_esg",
    "esg_adjusted_prices",
    "load_esg_series",
    "save_esg_series",
]


@dataclass(frozen=True)
class EsgSeries:
    """Daily ESG scores (0-10 scale) on a trading calendar."""

    calendar: TradingCalendar
    score: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "score", _as_value_array(self.score, len(self.calendar), "score")
        )

    def __len__(self) -> int:
        return len(self.calendar)


@dataclass(frozen=True)
class RelEsgSeries:
    """Relative rating (stock - market)/market per date, dimensionless."""

    calendar: TradingCalendar
    rel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rel", _as_value_array(self.rel, len(self.calendar), "rel"))

    def __len__(self) -> int:
        return len(self.calendar)


@dataclass(frozen=True)
class SmootherConfig:
    """Truncated-Gaussian moving-average parameters, in trading days.

    window_days is the full window width (half-window taps on each side);
    the defaults blend annual fiscal-year steps over roughly half a trading
    year (window = 4 sigma).
    """

    window_days: int = 126
    gaussian_sigma_days: float = 31.5

    def __post_init__(self):
        if self.window_days < 1:
            raise ValueError(f"window_days must be >= 1, got {self.window_days}")
        if not self.gaussian_sigma_days > 0:
            raise ValueError(f"gaussian_sigma_days must be > 0, got {self.gaussian_sigma_days}")


def _fiscal_anchor_ordinals(table: FiscalEsgTable) -> np.ndarray:
    """Calendar-date ordinal of each fiscal year's Dec-31 mark."""
    return np.array([date(year, 12, 31).toordinal() for year in table.years], dtype=np.float64)


def interpolate_esg_daily(
    table: FiscalEsgTable, calendar: TradingCalendar, cfg: SmootherConfig | None = None
) -> EsgSeries:
    """Expand fiscal-year scores to a smoothed daily series on `calendar`.

    Step 1 anchors each fiscal year's score at the last trading day on or
    before Dec 31 of that year (fiscal-year marks outside the calendar still
    shape the interpolation through their true calendar dates) and
    interpolates linearly in calendar time between anchors. Dates beyond the
    last fiscal year carry its score forward; dates before the first use the
    first score and emit the CalendarBeforeFirstFY warning.

    Step 2 applies a truncated Gaussian moving average measured in
    trading-day steps, with the kernel renormalized where the window is cut
    off by a series boundary. Output therefore stays within the convex hull
    of the table's scores.
    """
    if len(table) == 0:
        raise EmptyTable("fiscal-score table has no entries")
    if len(calendar) == 0:
        raise ValueError("calendar must be non-empty")
    cfg = cfg or SmootherConfig()

    day_ordinals = np.array([d.toordinal() for d in calendar.dates], dtype=np.float64)
    anchors = _fiscal_anchor_ordinals(table)
    scores = np.asarray(table.scores, dtype=np.float64)

    # Anchor each fiscal-year mark to the last trading day <= Dec 31 where one
    # exists; marks before the whole calendar keep their true date so the
    # first in-range segment still has the correct slope.
    snapped = anchors.copy()
    for i, a in enumerate(anchors):
        le = day_ordinals[day_ordinals <= a]
        if le.size:
            snapped[i] = le[-1]
    order = np.argsort(snapped, kind="stable")
    snapped, anchor_scores = snapped[order], scores[order]

    if day_ordinals[0] < snapped[0]:
        warnings.warn(
            f"calendar starts {calendar.dates[0]}, before the first fiscal-year mark; "
            "using the first score for earlier dates",
            CalendarBeforeFirstFY,
            stacklevel=2,
        )
    daily = np.interp(day_ordinals, snapped, anchor_scores)

    smoothed = _gaussian_moving_average(daily, cfg)
    return EsgSeries(calendar, smoothed)


def _gaussian_moving_average(values: np.ndarray, cfg: SmootherConfig) -> np.ndarray:
    half = cfg.window_days // 2
    if half == 0:
        return values.copy()
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / cfg.gaussian_sigma_days) ** 2)
    n = values.shape[0]
    padded = np.concatenate([np.full(half, np.nan), values, np.full(half, np.nan)])
    windows = np.lib.stride_tricks.sliding_window_view(padded, 2 * half + 1)
    valid = ~np.isnan(windows)
    weights = np.where(valid, kernel, 0.0)
    out = np.nansum(windows * weights, axis=1) / weights.sum(axis=1)
    assert out.shape[0] == n
    return out


def index_esg(components: list[tuple[EsgSeries, float]]) -> EsgSeries:
    """Date-wise weighted average of component series sharing one calendar.

    Weights must be nonnegative and are normalized to sum to 1, so any
    positive rescaling of the weight vector leaves the output unchanged.
    """
    if not components:
        raise ValueError("index_esg requires at least one component")
    calendar = components[0][0].calendar
    for series, _ in components[1:]:
        if series.calendar.dates != calendar.dates:
            raise CalendarMismatch("index components must share one calendar")
    weights = np.array([w for _, w in components], dtype=np.float64)
    if np.any(weights < 0):
        raise ValueError("index weights must be >= 0")
    total = weights.sum()
    if total == 0:
        raise AllZeroWeights("index weights sum to zero")
    weights /= total
    stacked = np.vstack([series.score for series, _ in components])
    return EsgSeries(calendar, weights @ stacked)


def index_esg_dated(
    components: dict[str, EsgSeries],
    snapshots: list[tuple[date, dict[str, float]]],
) -> EsgSeries:
    """Weighted index ESG under dated weight snapshots.

    Each calendar date uses the most recent snapshot effective on or before
    it; dates before the first snapshot use the first. Component series must
    share one calendar; every snapshot must weight a subset of the components.
    """
    if not components:
        raise ValueError("index_esg_dated requires at least one component")
    if not snapshots:
        raise ValueError("index_esg_dated requires at least one weight snapshot")
    names = sorted(components)
    calendar = components[names[0]].calendar
    for name in names[1:]:
        if components[name].calendar.dates != calendar.dates:
            raise CalendarMismatch("index components must share one calendar")
    snapshots = sorted(snapshots, key=lambda snap: snap[0])
    for effective, weights in snapshots:
        unknown = set(weights) - set(names)
        if unknown:
            raise ValueError(f"snapshot {effective} weights unknown components {sorted(unknown)}")

    stacked = np.vstack([components[name].score for name in names])
    position = {name: i for i, name in enumerate(names)}
    out = np.empty(len(calendar))
    snap_idx = 0
    current = _weight_vector(snapshots[0][1], position)
    for i, day in enumerate(calendar.dates):
        while snap_idx + 1 < len(snapshots) and snapshots[snap_idx + 1][0] <= day:
            snap_idx += 1
            current = _weight_vector(snapshots[snap_idx][1], position)
        out[i] = current @ stacked[:, i]
    return EsgSeries(calendar, out)


def _weight_vector(weights: dict[str, float], position: dict[str, int]) -> np.ndarray:
    vec = np.zeros(len(position))
    for name, w in weights.items():
        if w < 0:
            raise ValueError(f"weight for {name!r} must be >= 0")
        vec[position[name]] = w
    total = vec.sum()
    if total == 0:
        raise AllZeroWeights("weight snapshot sums to zero")
    return vec / total


def relative_esg(stock: EsgSeries, market: EsgSeries) -> RelEsgSeries:
    """rel_t = (stock_t - market_t) / market_t on the shared calendar."""
    if stock.calendar.dates != market.calendar.dates:
        raise CalendarMismatch("stock and market ESG series must share one calendar")
    zero = np.nonzero(market.score == 0.0)[0]
    if zero.size:
        raise DivisionByZero(f"market ESG score is 0 on {market.calendar[int(zero[0])]}")
    return RelEsgSeries(stock.calendar, (stock.score - market.score) / market.score)


def esg_adjusted_prices(
    financial: PriceSeries, rel: RelEsgSeries, gamma_esg: float
) -> PriceSeries:
    """Affinity-tilted prices: adjusted_t = quoted_t * (1 + gamma_esg * rel_t).

    gamma_esg = 0 returns the quoted series unchanged; the adjustment is
    affine in gamma_esg date-wise, which is what makes the sample-moment
    decompositions of the adjusted series exact.
    """
    if financial.calendar.dates != rel.calendar.dates:
        raise CalendarMismatch("price and relative-ESG series must share one calendar")
    return PriceSeries(financial.calendar, financial.values * (1.0 + gamma_esg * rel.rel))


def load_esg_series(path: str | Path, date_col: int | str = 0, value_col: int | str = 1) -> EsgSeries:
    """Load a daily (date, score) CSV."""
    calendar, values = _load_dated_values(path, date_col, value_col)
    return EsgSeries(calendar, values)


def save_esg_series(series: EsgSeries, path: str | Path) -> None:
    _write_dated_values(path, ("date", "score"), series.calendar, series.score)
