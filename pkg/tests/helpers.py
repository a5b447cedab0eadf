"""Shared builders for the test suite.

Everything here is deterministic: builders take an explicit rng or seed so
any failing case can be replayed from the test id alone.
"""

from datetime import date, timedelta

import numpy as np

from bbsm import (
    FilterSpec,
    MarketIndexParams,
    PriceSeries,
    PricingConfig,
    RisklessParams,
    RiskyParams,
    TradingCalendar,
    riskless_price_path,
    simulate_market_index,
)


def weekday_calendar(n: int, start: date = date(2020, 1, 2)) -> TradingCalendar:
    """n consecutive weekdays starting at `start` (a synthetic trading calendar)."""
    days = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return TradingCalendar(tuple(days))


def price_series(values, start: date = date(2020, 1, 2)) -> PriceSeries:
    values = np.asarray(values, dtype=np.float64)
    return PriceSeries(weekday_calendar(values.shape[0], start), values)


def make_params(
    a=0.0,
    mu=0.0,
    v=1.0,
    sigma=0.0,
    gamma=0.0,
    delta=1.0,
    a0=100.0,
) -> RiskyParams:
    return RiskyParams(
        a=a, mu=mu, v=v, sigma=sigma, gamma=gamma, delta=delta, adj_r2=0.0, a0=a0
    )


def draw_admissible(rng: np.random.Generator, maturity: int, delta: float = 1.0):
    """One random parameter draw that keeps eta > 0 and q in (0, 1) over the
    whole depth-`maturity` tree.

    The ranges are sized so the worst reachable node still has conditional
    volatility >= ~0.3 while the drift mismatch stays <= ~0.08, which bounds
    |q - p| well inside (0, 1) for p in [0.35, 0.65].
    """
    a0 = rng.uniform(80.0, 120.0)
    p = rng.uniform(0.35, 0.65)
    params = make_params(
        a=rng.uniform(-0.02, 0.02),
        mu=rng.uniform(-2e-4, 2e-4),
        v=rng.uniform(0.5, 1.5),
        sigma=rng.uniform(0.0, 0.005),
        gamma=rng.uniform(-0.1, 0.1),
        delta=delta,
        a0=a0,
    )
    riskless = RisklessParams(
        rho=rng.uniform(-1e-4, 1e-4), r=rng.uniform(0.0, 2e-4), beta0=a0, adj_r2=0.0
    )
    config = PricingConfig(
        delta=delta,
        up_prob=p,
        x_init=rng.uniform(-2.0, 2.0),
        filter=FilterSpec(d=10.0, kind="power"),
        a0=a0,
        beta_path=riskless_price_path(riskless, maturity, delta),
    )
    return params, riskless, config


def make_market(n: int = 600, seed: int = 7, a0: float = 100.0) -> PriceSeries:
    """A well-behaved simulated index long enough for every fit in the suite."""
    gen = MarketIndexParams(a=0.01, mu=1e-4, v=0.9, sigma=1e-3, p0=0.5, a0=a0)
    return simulate_market_index(gen, n, seed=seed)
