"""Sign-walk path processes from a market index, the path filter, and the
discrete market-index simulator.

Daily index changes are standardized over the full estimation window, mapped
to a two-valued mean-0/variance-1 sign sequence (up value sqrt((1-p)/p) with
probability p, down value -sqrt(p/(1-p))), and accumulated into the scaled
walk X and the filtered sum Y. X converges in law to a Brownian motion and Y
to the stochastic integral of h(B); the statistical tests live in the test
suite, not here.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateProbability,
    LengthMismatch,
    NegativeVolatility,
    ProbabilityOutOfRange,
    TooShort,
    ZeroVariance,
)
from .ingest import PriceSeries, TradingCalendar, _as_value_array

__all__ = [
    "ChangeSeries",
    "CsyPath",
    "FilterSpec",
    "MarketIndexParams",
    "price_changes",
    "standardize",
    "estimate_up_probability",
    "bernoulli_sign_values",
    "bernoulli_signs",
    "cumulative_path",
    "h_eval",
    "integral_path",
    "build_csy_path",
    "simulate_market_index",
    "export_csy_path",
]


@dataclass(frozen=True)
class ChangeSeries:
    """One-step differences of a price series, dated by the end of each step."""

    calendar: TradingCalendar
    change: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "change", _as_value_array(self.change, len(self.calendar), "change")
        )

    def __len__(self) -> int:
        return len(self.calendar)


@dataclass(frozen=True)
class FilterSpec:
    """Path filter h applied to the cumulative walk.

    kind "power" (the production filter) is the odd power law
    sign(x)*|x/d|^(3/5): the unique continuous odd extension of (x/d)^(3/5)
    to negative arguments, monotone and scale-covariant in d. kind
    "gaussian" is the bell-shaped alternative from earlier work (a Gaussian
    density of scale d), kept for comparison runs and off by default.
    kinds "linear" (x/d) and "unit" (constant 1) exist for validation only.
    """

    d: float = 10.0
    kind: str = "power"

    _KINDS = ("power", "gaussian", "linear", "unit")

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"filter scale d must be > 0, got {self.d}")
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}; expected one of {self._KINDS}")


@dataclass(frozen=True)
class MarketIndexParams:
    """Coefficients of the discrete market-index dynamics.

    (a, mu) set the drift a + mu*A, (v, sigma) the diffusion v + sigma*A;
    (p0, p1, p2) expand the up-move probability p0 + p1*sqrt(delta) +
    p2*delta; a0 is the initial index value.
    """

    a: float
    mu: float
    v: float
    sigma: float
    p0: float
    p1: float = 0.0
    p2: float = 0.0
    a0: float = 100.0

    def up_probability(self, delta: float) -> float:
        p = self.p0 + self.p1 * math.sqrt(delta) + self.p2 * delta
        if not 0.0 < p < 1.0:
            raise ProbabilityOutOfRange(
                f"up probability p0 + p1*sqrt(delta) + p2*delta = {p} is outside (0, 1)"
            )
        return p


@dataclass(frozen=True)
class CsyPath:
    """Jointly indexed path processes built from one change series.

    z and xi have one entry per step (step k covers dates k-1 -> k of the
    source series); x, h_of_x, and y have one entry per source date with
    x[0] = y[0] = 0, x[k] - x[k-1] = sqrt(delta)*xi[k-1], and
    y[k] - y[k-1] = sqrt(delta)*xi[k-1]*h_of_x[k-1].
    """

    z: np.ndarray
    up_prob: float
    xi: np.ndarray
    x: np.ndarray
    h_of_x: np.ndarray
    y: np.ndarray
    delta: float

    def __post_init__(self):
        for name in ("z", "xi", "x", "h_of_x", "y"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not 0.0 < self.up_prob < 1.0:
            raise ProbabilityOutOfRange(f"up_prob {self.up_prob} is outside (0, 1)")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        n = self.z.shape[0]
        if self.xi.shape[0] != n:
            raise LengthMismatch("z and xi must have one entry per step")
        for name in ("x", "h_of_x", "y"):
            if getattr(self, name).shape[0] != n + 1:
                raise LengthMismatch(f"{name} must have one entry per source date (steps + 1)")

    @property
    def steps(self) -> int:
        return self.xi.shape[0]


def price_changes(series: PriceSeries) -> ChangeSeries:
    """change[k] = value[k+1] - value[k], dated by the later day."""
    if len(series) < 2:
        raise TooShort("need at least 2 prices to form changes")
    calendar = TradingCalendar(series.calendar.dates[1:])
    return ChangeSeries(calendar, np.diff(series.values))


def standardize(changes: ChangeSeries) -> np.ndarray:
    """Center and scale by the full-window sample mean and (n-1) std."""
    c = changes.change
    if c.shape[0] < 2:
        raise TooShort("need at least 2 changes to standardize")
    std = c.std(ddof=1)
    if std == 0.0:
        raise ZeroVariance("change series is constant; cannot standardize")
    return (c - c.mean()) / std


def estimate_up_probability(z: np.ndarray) -> float:
    """Fraction of standardized changes >= 0 (zero counts as an up move)."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise TooShort("cannot estimate an up probability from an empty series")
    p = float(np.count_nonzero(z >= 0.0) / z.size)
    if p == 0.0 or p == 1.0:
        raise DegenerateProbability("all standardized changes share one sign")
    return p


def bernoulli_sign_values(p: float) -> tuple[float, float]:
    """(xi_up, xi_down) magnitudes making the two-point sign mean 0, variance 1.

    xi_up = sqrt((1-p)/p), xi_down = sqrt(p/(1-p)); then
    p*xi_up - (1-p)*xi_down = 0 and p*xi_up**2 + (1-p)*xi_down**2 = 1.
    """
    if not 0.0 < p < 1.0:
        raise ProbabilityOutOfRange(f"p = {p} is outside (0, 1)")
    return math.sqrt((1.0 - p) / p), math.sqrt(p / (1.0 - p))


def bernoulli_signs(z: np.ndarray, p: float) -> np.ndarray:
    """Map standardized changes to the two-valued sign sequence.

    xi[k] = sqrt((1-p)/p) where z[k] >= 0, else -sqrt(p/(1-p)).
    """
    xi_up, xi_down = bernoulli_sign_values(p)
    z = np.asarray(z, dtype=np.float64)
    return np.where(z >= 0.0, xi_up, -xi_down)


def cumulative_path(xi: np.ndarray, delta: float) -> np.ndarray:
    """x[k] = sum of sqrt(delta)*xi over the first k steps, with x[0] = 0."""
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    xi = np.asarray(xi, dtype=np.float64)
    x = np.empty(xi.shape[0] + 1)
    x[0] = 0.0
    np.cumsum(math.sqrt(delta) * xi, out=x[1:])
    return x


def h_eval(x, spec: FilterSpec):
    """Evaluate the path filter at x (scalar or array)."""
    r = np.asarray(x, dtype=np.float64) / spec.d
    if spec.kind == "power":
        out = np.copysign(np.abs(r) ** 0.6, r)
    elif spec.kind == "gaussian":
        out = np.exp(-0.5 * r * r) / (spec.d * math.sqrt(2.0 * math.pi))
    elif spec.kind == "linear":
        out = r
    else:  # unit
        out = np.ones_like(r)
    if np.ndim(x) == 0:
        return float(out)
    return out


def integral_path(xi: np.ndarray, x: np.ndarray, spec: FilterSpec, delta: float) -> np.ndarray:
    """y[k] = sum over steps i <= k of sqrt(delta)*xi[i]*h(x[i-1]), y[0] = 0.

    The filter is evaluated at the walk value *before* each step, which is
    what makes y a discrete stochastic integral of h along x.
    """
    xi = np.asarray(xi, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != xi.shape[0] + 1:
        raise LengthMismatch("x must be one longer than xi")
    y = np.empty(x.shape[0])
    y[0] = 0.0
    np.cumsum(math.sqrt(delta) * xi * h_eval(x[:-1], spec), out=y[1:])
    return y


def build_csy_path(index: PriceSeries, spec: FilterSpec, delta: float = 1.0) -> CsyPath:
    """Compose the full construction from an index series.

    Changes -> standardized z -> up probability -> signs -> cumulative walk
    x -> filter values h(x) -> filtered sum y.
    """
    if len(index) < 3:
        raise TooShort("need at least 3 index values (2 changes) to build a path")
    z = standardize(price_changes(index))
    p = estimate_up_probability(z)
    xi = bernoulli_signs(z, p)
    x = cumulative_path(xi, delta)
    return CsyPath(
        z=z,
        up_prob=p,
        xi=xi,
        x=x,
        h_of_x=h_eval(x, spec),
        y=integral_path(xi, x, spec, delta),
        delta=delta,
    )


def _weekday_calendar(start: date, n: int) -> TradingCalendar:
    days: list[date] = []
    day = start
    while len(days) < n:
        if day.weekday() < 5:
            days.append(day)
        day += timedelta(days=1)
    return TradingCalendar(tuple(days))


def simulate_market_index(
    params: MarketIndexParams,
    n: int,
    delta: float = 1.0,
    seed: int = 0,
    start: date = date(2020, 1, 2),
) -> PriceSeries:
    """Simulate n steps of the discrete index dynamics on a synthetic calendar.

    Each step moves by drift*delta plus a two-valued diffusion term:
    up moves add xi_up*psi*sqrt(delta) with probability p, down moves
    subtract xi_down*psi*sqrt(delta), where drift = a + mu*A and
    psi = v + sigma*A. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("need at least one step")
    p = params.up_probability(delta)
    xi_up, xi_down = bernoulli_sign_values(p)
    sqrt_dt = math.sqrt(delta)
    rng = np.random.default_rng(seed)
    ups = rng.random(n) < p

    values = np.empty(n + 1)
    values[0] = params.a0
    a = params.a0
    for k in range(n):
        phi = params.a + params.mu * a
        psi = params.v + params.sigma * a
        if psi < 0:
            raise NegativeVolatility(
                f"diffusion coefficient v + sigma*A = {psi} < 0 at step {k} (A = {a})"
            )
        jump = xi_up if ups[k] else -xi_down
        a = a + phi * delta + psi * sqrt_dt * jump
        values[k + 1] = a
    return PriceSeries(_weekday_calendar(start, n + 1), values)


def simulate_stock_prices(
    market: PriceSeries,
    a: float,
    mu: float,
    v: float,
    sigma: float,
    gamma: float,
    a0: float,
    spec: FilterSpec | None = None,
    delta: float = 1.0,
    noise_std: float = 0.0,
    seed: int = 0,
) -> PriceSeries:
    """Synthesize a stock driven by the market's realized sign path.

    Each one-step change is (a + mu*A)*delta plus the conditional volatility
    v + sigma*A + gamma*h(X) times sqrt(delta) times the market's realized
    sign xi, optionally plus Gaussian noise of standard deviation noise_std.
    With noise_std = 0 the series satisfies the fitted regression exactly,
    which is what makes it a parameter-recovery fixture. Deterministic for a
    fixed seed.
    """
    spec = spec if spec is not None else FilterSpec()
    path = build_csy_path(market, spec, delta)
    n = path.steps
    sqrt_dt = math.sqrt(delta)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_std, n) if noise_std > 0.0 else np.zeros(n)

    values = np.empty(n + 1)
    values[0] = a0
    level = a0
    for k in range(n):
        eta = v + sigma * level + gamma * path.h_of_x[k]
        if eta < 0:
            raise NegativeVolatility(
                f"conditional volatility {eta} < 0 at step {k} (A = {level}); "
                "choose coefficients that keep v + sigma*A + gamma*h(X) nonnegative"
            )
        level = level + (a + mu * level) * delta + eta * sqrt_dt * path.xi[k] + noise[k]
        values[k + 1] = level
    return PriceSeries(market.calendar, values)


def export_csy_path(
    path: CsyPath,
    calendar: TradingCalendar,
    dest: str | Path,
    preamble: tuple[str, ...] = (),
) -> None:
    """Write the path as CSV: one row per source date.

    Columns are (k, date, z, xi, x, h_of_x, y, up_prob); z and xi are blank
    on row k = 0, which precedes the first step. Optional preamble lines are
    written first as '#'-prefixed comments.
    """
    if len(calendar) != path.x.shape[0]:
        raise LengthMismatch(
            f"calendar has {len(calendar)} dates for {path.x.shape[0]} path entries"
        )
    with open(dest, "w", newline="") as fh:
        for line in preamble:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(("k", "date", "z", "xi", "x", "h_of_x", "y", "up_prob"))
        p = repr(float(path.up_prob))
        for k, day in enumerate(calendar):
            z = repr(float(path.z[k - 1])) if k > 0 else ""
            xi = repr(float(path.xi[k - 1])) if k > 0 else ""
            writer.writerow(
                (
                    k,
                    day.isoformat(),
                    z,
                    xi,
                    repr(float(path.x[k])),
                    repr(float(path.h_of_x[k])),
                    repr(float(path.y[k])),
                    p,
                )
            )
