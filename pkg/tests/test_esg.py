"""Fiscal-year ESG expansion, index aggregation, and price adjustment."""

from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbsm import (
    AllZeroWeights,
    CalendarBeforeFirstFY,
    CalendarMismatch,
    DivisionByZero,
    EmptyTable,
    EsgSeries,
    FiscalEsgTable,
    PriceSeries,
    RelEsgSeries,
    SmootherConfig,
    esg_adjusted_prices,
    index_esg,
    index_esg_dated,
    interpolate_esg_daily,
    load_esg_series,
    relative_esg,
    save_esg_series,
)

from helpers import price_series, weekday_calendar

# window_days=1 has a zero half-window, so interpolation passes through raw.
NO_SMOOTHING = SmootherConfig(window_days=1)


def consecutive_calendar(start: date, n: int):
    """Every calendar day, so trading-day index and date ordinal move together."""
    from bbsm import TradingCalendar

    return TradingCalendar(tuple(start + timedelta(days=i) for i in range(n)))


class TestInterpolation:
    @pytest.mark.filterwarnings("ignore::bbsm.errors.CalendarBeforeFirstFY")
    def test_scores_hit_at_anchor_dates(self):
        table = FiscalEsgTable(((2020, 4.0), (2021, 6.0)))
        cal = consecutive_calendar(date(2020, 6, 1), 600)
        daily = interpolate_esg_daily(table, cal, NO_SMOOTHING)
        assert daily.score[cal.index_of(date(2020, 12, 31))] == pytest.approx(4.0, abs=1e-12)
        assert daily.score[cal.index_of(date(2021, 12, 31))] == pytest.approx(6.0, abs=1e-12)

    def test_linear_between_anchors(self):
        table = FiscalEsgTable(((2020, 4.0), (2021, 6.0)))
        cal = consecutive_calendar(date(2020, 12, 31), 366)
        daily = interpolate_esg_daily(table, cal, NO_SMOOTHING)
        # Midpoint of a linear segment is the average of its ends.
        mid = cal.index_of(date(2021, 7, 2))  # 183 of 365 days
        frac = 183 / 365
        assert daily.score[mid] == pytest.approx(4.0 + 2.0 * frac, abs=1e-12)

    @pytest.mark.filterwarnings("ignore::bbsm.errors.CalendarBeforeFirstFY")
    def test_anchor_snaps_to_last_trading_day(self):
        # Dec 31 2022 is a Saturday; the anchor must land on Friday Dec 30.
        table = FiscalEsgTable(((2021, 4.0), (2022, 8.0)))
        cal = weekday_calendar(600, start=date(2021, 12, 1))
        daily = interpolate_esg_daily(table, cal, NO_SMOOTHING)
        assert daily.score[cal.index_of(date(2022, 12, 30))] == pytest.approx(8.0, abs=1e-12)

    def test_constant_extension_after_last_year(self):
        table = FiscalEsgTable(((2020, 5.0),))
        cal = consecutive_calendar(date(2021, 6, 1), 30)
        daily = interpolate_esg_daily(table, cal, NO_SMOOTHING)
        assert np.all(daily.score == 5.0)

    def test_warns_before_first_year(self):
        table = FiscalEsgTable(((2021, 5.0),))
        cal = consecutive_calendar(date(2020, 1, 1), 30)
        with pytest.warns(CalendarBeforeFirstFY):
            daily = interpolate_esg_daily(table, cal, NO_SMOOTHING)
        assert np.all(daily.score == 5.0)

    @pytest.mark.filterwarnings("ignore::bbsm.errors.CalendarBeforeFirstFY")
    def test_output_within_score_hull(self):
        table = FiscalEsgTable(((2019, 2.0), (2020, 9.0), (2021, 4.0)))
        cal = consecutive_calendar(date(2019, 6, 1), 900)
        daily = interpolate_esg_daily(table, cal, SmootherConfig())
        assert daily.score.min() >= 2.0 - 1e-12
        assert daily.score.max() <= 9.0 + 1e-12

    def test_empty_table(self):
        with pytest.raises(EmptyTable):
            interpolate_esg_daily(FiscalEsgTable(()), weekday_calendar(5))


class TestSmoothing:
    def test_affine_series_is_fixed_point(self):
        # A truncated, boundary-renormalized symmetric kernel reproduces any
        # affine sequence exactly away from the boundary; near the boundary the
        # renormalization keeps constants exact, so test an affine interior.
        table = FiscalEsgTable(((2019, 2.0), (2025, 8.0)))
        cal = consecutive_calendar(date(2020, 1, 1), 1000)
        smooth = interpolate_esg_daily(table, cal, SmootherConfig(window_days=30, gaussian_sigma_days=7.5))
        raw = interpolate_esg_daily(table, cal, NO_SMOOTHING)
        interior = slice(15, -15)
        np.testing.assert_allclose(smooth.score[interior], raw.score[interior], atol=1e-10)

    @pytest.mark.filterwarnings("ignore::bbsm.errors.CalendarBeforeFirstFY")
    def test_constant_series_everywhere(self):
        table = FiscalEsgTable(((2020, 5.0),))
        cal = consecutive_calendar(date(2020, 1, 1), 400)
        smooth = interpolate_esg_daily(table, cal, SmootherConfig())
        np.testing.assert_allclose(smooth.score, 5.0, atol=1e-12)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SmootherConfig(window_days=0)
        with pytest.raises(ValueError):
            SmootherConfig(gaussian_sigma_days=0.0)


class TestIndexAggregation:
    def _series(self, values):
        cal = weekday_calendar(len(values))
        return EsgSeries(cal, np.asarray(values, dtype=np.float64))

    def test_weighted_average(self):
        a = self._series([4.0, 4.0])
        b = self._series([8.0, 8.0])
        idx = index_esg([(a, 3.0), (b, 1.0)])
        np.testing.assert_allclose(idx.score, 5.0, atol=1e-15)

    def test_weight_rescaling_invariant(self):
        a = self._series([4.0, 6.0])
        b = self._series([8.0, 2.0])
        one = index_esg([(a, 0.3), (b, 0.7)])
        ten = index_esg([(a, 3.0), (b, 7.0)])
        np.testing.assert_array_equal(one.score, ten.score)

    def test_zero_weights(self):
        a = self._series([4.0])
        with pytest.raises(AllZeroWeights):
            index_esg([(a, 0.0)])

    def test_calendar_mismatch(self):
        a = self._series([4.0, 5.0])
        b = EsgSeries(weekday_calendar(2, start=date(2021, 1, 4)), [1.0, 2.0])
        with pytest.raises(CalendarMismatch):
            index_esg([(a, 1.0), (b, 1.0)])

    def test_dated_weights_switch_on_effective_date(self):
        cal = weekday_calendar(4)
        comp = {
            "A": EsgSeries(cal, [1.0, 1.0, 1.0, 1.0]),
            "B": EsgSeries(cal, [3.0, 3.0, 3.0, 3.0]),
        }
        snaps = [
            (cal[0], {"A": 1.0}),
            (cal[2], {"B": 1.0}),
        ]
        idx = index_esg_dated(comp, snaps)
        assert idx.score.tolist() == [1.0, 1.0, 3.0, 3.0]

    def test_dated_weights_unknown_component(self):
        cal = weekday_calendar(2)
        comp = {"A": EsgSeries(cal, [1.0, 1.0])}
        with pytest.raises(ValueError, match="unknown components"):
            index_esg_dated(comp, [(cal[0], {"Z": 1.0})])


class TestRelativeEsg:
    def test_formula(self):
        cal = weekday_calendar(2)
        stock = EsgSeries(cal, [6.0, 3.0])
        market = EsgSeries(cal, [5.0, 6.0])
        rel = relative_esg(stock, market)
        np.testing.assert_allclose(rel.rel, [0.2, -0.5], atol=1e-15)

    def test_zero_market_score(self):
        cal = weekday_calendar(2)
        stock = EsgSeries(cal, [6.0, 3.0])
        market = EsgSeries(cal, [5.0, 0.0])
        with pytest.raises(DivisionByZero):
            relative_esg(stock, market)


finite_scores = st.floats(min_value=0.5, max_value=10.0)


class TestAdjustedPrices:
    def test_gamma_zero_is_identity(self):
        prices = price_series([100.0, 101.0, 99.0])
        rel = RelEsgSeries(prices.calendar, [0.1, -0.2, 0.3])
        adj = esg_adjusted_prices(prices, rel, 0.0)
        np.testing.assert_array_equal(adj.values, prices.values)

    @given(
        data=st.lists(
            st.tuples(st.floats(min_value=-500.0, max_value=500.0), finite_scores, finite_scores),
            min_size=2,
            max_size=64,
        ),
        gamma=st.floats(min_value=-2.0, max_value=2.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_moment_identities(self, data, gamma):
        """Sample mean, variance, and one-step differences of the adjusted
        series decompose exactly through the tilt term."""
        prices = np.array([row[0] for row in data])
        stock_score = np.array([row[1] for row in data])
        market_score = np.array([row[2] for row in data])
        cal = weekday_calendar(len(data))
        rel = relative_esg(EsgSeries(cal, stock_score), EsgSeries(cal, market_score))
        adj = esg_adjusted_prices(PriceSeries(cal, prices), rel, gamma)

        tilt = prices * rel.rel
        scale = max(1.0, float(np.max(np.abs(adj.values))))

        # mean[adjusted] = mean[quoted] + gamma * mean[quoted * rel]
        assert abs(adj.values.mean() - (prices.mean() + gamma * tilt.mean())) <= 1e-12 * scale

        # var[adjusted] = var[quoted] + 2 gamma cov(quoted, tilt) + gamma^2 var[tilt]
        var = np.var(adj.values, ddof=1)
        expanded = (
            np.var(prices, ddof=1)
            + 2.0 * gamma * np.cov(prices, tilt, ddof=1)[0, 1]
            + gamma * gamma * np.var(tilt, ddof=1)
        )
        assert abs(var - expanded) <= 1e-12 * max(1.0, scale * scale)

        # one-step differences decompose term-wise
        diff = np.diff(adj.values)
        expected = np.diff(prices) + gamma * np.diff(tilt)
        assert np.max(np.abs(diff - expected)) <= 1e-12 * scale

    def test_calendar_mismatch(self):
        prices = price_series([1.0, 2.0])
        rel = RelEsgSeries(weekday_calendar(2, start=date(2021, 1, 4)), [0.0, 0.0])
        with pytest.raises(CalendarMismatch):
            esg_adjusted_prices(prices, rel, 1.0)


class TestEsgCsv:
    def test_round_trip(self, tmp_path):
        series = EsgSeries(weekday_calendar(3), [4.123456789012345, 5.0, 6.5])
        dest = tmp_path / "esg.csv"
        save_esg_series(series, dest)
        back = load_esg_series(dest)
        assert np.array_equal(back.score, series.score)
